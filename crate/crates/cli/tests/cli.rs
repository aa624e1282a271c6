use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const MANNHEIM: &str = r#"<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/country> <http://dbpedia.org/resource/Germany> .
<http://dbpedia.org/resource/University_of_Mannheim> <http://dbpedia.org/property/city> <http://dbpedia.org/resource/Mannheim> .
<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/populationMetro> "2362046"^^<http://www.w3.org/2001/XMLSchema#nonNegativeInteger> .
<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/foundingDate> "1607-01-24"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/abstract> "Mannheim, officially the University City of Mannheim, is the second-largest city in the German state of Baden-Württemberg."@en .
<http://dbpedia.org/resource/Mannheim> <http://xmlns.com/foaf/0.1/depiction> <http://commons.wikimedia.org/wiki/Special:FilePath/NUB_Mannheim_2014-03-13.jpg> .
"#;

const IMAGE: &str = "http://commons.wikimedia.org/wiki/Special:FilePath/NUB_Mannheim_2014-03-13.jpg";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_literal-forge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("mannheim.nt", MANNHEIM);
        f.write(
            "tags.json",
            &format!(r#"{{"{IMAGE}": [{{"name": "building", "score": 0.7}}, {{"name": "person", "score": 0.2}}]}}"#),
        );
        f.write(
            "config.json",
            r#"{
                "namespace": "http://literal-forge.org/new/",
                "seed": 7,
                "image_provider": {"tag_map": "tags.json"},
                "modalities": {"image_predicates": ["http://xmlns.com/foaf/0.1/depiction"]}
            }"#,
        );
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_mannheim() {
    let f = Fixture::new();
    let o = run(&["profile", "--input", &f.p("mannheim.nt"), "--config", &f.p("config.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["triples"], 6);
    assert_eq!(v["relations"], 6);
    assert_eq!(v["objects"]["iris"], 2);
    assert_eq!(v["objects"]["literals"], 4);
    assert_eq!(v["literals"]["images"], 1);

    let human = run(&["profile", "--input", &f.p("mannheim.nt"), "--human"]);
    assert_eq!(code(&human), 0);
    assert!(String::from_utf8_lossy(&human.stdout).contains("Triples                          6"));
}

#[test]
fn profile_empty_and_missing() {
    let f = Fixture::new();
    f.write("empty.nt", "");
    let o = run(&["profile", "--input", &f.p("empty.nt")]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["triples"], 0);
    assert_eq!(v["nodes"], 0);

    let o = run(&["profile", "--input", &f.p("missing.nt")]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn strict_mode_rejects_garbage() {
    let f = Fixture::new();
    f.write("bad.nt", &format!("{MANNHEIM}this is not a triple\n"));
    assert_eq!(code(&run(&["profile", "--input", &f.p("bad.nt"), "--strict"])), 1);
    assert_eq!(code(&run(&["profile", "--input", &f.p("bad.nt")])), 0);
}

#[test]
fn one_entity_then_verify() {
    let f = Fixture::new();
    let o = run(&["transform", "--input", &f.p("mannheim.nt"), "--output", &f.p("out.nt"), "--strategy", "ONEENTITY"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = f.read("out.nt");
    assert!(out.contains("<http://literal-forge.org/new/populationMetroAnyValue>"));
    assert!(out.contains("<http://literal-forge.org/new/abstractAnyValue>"));
    assert_eq!(out.lines().count(), 6);
    assert!(f.path("out.nt.report.json").exists());

    let v = run(&["verify", "--output", &f.p("out.nt")]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stdout));
}

#[test]
fn combined_with_tag_map() {
    let f = Fixture::new();
    let o = run(&[
        "transform",
        "--input",
        &f.p("mannheim.nt"),
        "--output",
        &f.p("out.nt"),
        "--config",
        &f.p("config.json"),
        "--emit-weights",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = f.read("out.nt");
    assert!(out.contains(
        "<http://dbpedia.org/resource/Mannheim> <http://xmlns.com/foaf/0.1/depiction> <http://literal-forge.org/new/VGG_building> ."
    ));
    assert!(out.contains("<http://literal-forge.org/new/populationMetroBin00>"));
    let weights = f.read("out.nt.weights.tsv");
    assert!(weights.lines().any(|l| l.ends_with("VGG_building> .\t0.7")));
    assert_eq!(code(&run(&["verify", "--output", &f.p("out.nt")])), 0);
}

#[test]
fn seeded_runs_identical() {
    let f = Fixture::new();
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4"].iter().enumerate() {
        let name = format!("out{i}.nt");
        let o = run(&[
            "transform",
            "--input",
            &f.p("mannheim.nt"),
            "--output",
            &f.p(&name),
            "--config",
            &f.p("config.json"),
            "--seed",
            "7",
            "--workers",
            workers,
        ]);
        assert_eq!(code(&o), 0);
        outputs.push(f.read(&name));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_config_writes_nothing() {
    let f = Fixture::new();
    f.write("bad.json", r#"{"namespace": "http://literal-forge.org/new/", "sed": 3}"#);
    let o = run(&["transform", "--input", &f.p("mannheim.nt"), "--output", &f.p("out.nt"), "--config", &f.p("bad.json")]);
    assert_eq!(code(&o), 2);
    assert!(!f.path("out.nt").exists());
    let o = run(&["transform", "--input", &f.p("mannheim.nt"), "--output", &f.p("out.nt"), "--strategy", "FANCY"]);
    assert_eq!(code(&o), 2);
    assert!(!f.path("out.nt").exists());
}

#[test]
fn strategy_failure_without_fallback() {
    let f = Fixture::new();
    f.write(
        "nofallback.json",
        r#"{"fallback": "NONE", "defaults": "IMAGE", "modalities": {"image_predicates": ["http://xmlns.com/foaf/0.1/depiction"]}}"#,
    );
    let o = run(&[
        "transform",
        "--input",
        &f.p("mannheim.nt"),
        "--output",
        &f.p("out.nt"),
        "--config",
        &f.p("nofallback.json"),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn tampering_fails_verification() {
    let f = Fixture::new();
    let o = run(&["transform", "--input", &f.p("mannheim.nt"), "--output", &f.p("out.nt"), "--strategy", "TRANSFORM"]);
    assert_eq!(code(&o), 0);
    let clean = f.read("out.nt");
    let report = f.read("out.nt.report.json");

    let literal = MANNHEIM.lines().nth(2).unwrap();
    f.write("out.nt", &format!("{clean}{literal}\n"));
    let v = run(&["verify", "--output", &f.p("out.nt")]);
    assert_eq!(code(&v), 4);

    f.write("out.nt", &clean);
    let mut r: serde_json::Value = serde_json::from_str(&report).unwrap();
    let e = r["rows"][0]["delta_entities"].as_u64().unwrap();
    r["rows"][0]["delta_entities"] = (e + 1).into();
    f.write("out.nt.report.json", &r.to_string());
    let v = run(&["verify", "--output", &f.p("out.nt")]);
    assert_eq!(code(&v), 4);
    assert!(String::from_utf8_lossy(&v.stdout).contains("populationMetro"));
}

#[test]
fn stdout_output_and_gzip_input() {
    let f = Fixture::new();
    let gz = {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let mut e = GzEncoder::new(Vec::new(), flate2::Compression::default());
        e.write_all(MANNHEIM.as_bytes()).unwrap();
        e.finish().unwrap()
    };
    fs::write(f.path("mannheim.nt.gz"), gz).unwrap();
    let o = run(&[
        "transform",
        "--input",
        &f.p("mannheim.nt.gz"),
        "--output",
        "-",
        "--strategy",
        "EXCLUDE",
        "--report",
        &f.p("r.json"),
    ]);
    assert_eq!(code(&o), 0);
    // depiction stays relational without an image-predicate config
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);
    assert_eq!(json(&f.path("r.json"))["totals"]["removed"], 3);
}
