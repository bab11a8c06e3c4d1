use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../nets")
}

fn net(name: &str) -> String {
    nets().join(format!("{name}.mmnet")).display().to_string()
}

fn mmnet(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mmnet"));
    cmd.args(args);
    match stdin {
        None => cmd.output().unwrap(),
        Some(text) => {
            use std::io::Write;
            use std::process::Stdio;
            let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
            child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
            child.wait_with_output().unwrap()
        }
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn last_line(o: &Output) -> String {
    // the prompt shares a line with whatever follows it
    stdout(o).lines().last().unwrap_or_default().trim_start_matches("> ").to_string()
}

#[test]
fn run_splitter_emits_two_pieces() {
    let o = mmnet(&["run", "--net", &net("splitter")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(last_line(&o).contains("ch_out:2"), "{}", stdout(&o));
    assert!(last_line(&o).contains("objects:3"));
}

#[test]
fn runs_are_reproducible() {
    let a = mmnet(&["run", "--net", &net("pipeline")], None);
    let b = mmnet(&["run", "--net", &net("pipeline")], None);
    assert_eq!(a.stdout, b.stdout);
    let a = mmnet(&["run", "--net", &net("splitter"), "--seed", "11"], None);
    let b = mmnet(&["run", "--net", &net("splitter"), "--seed", "11"], None);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("seed: 11\n"));
    assert!(last_line(&a).contains("ch_out:2"));
}

#[test]
fn zero_steps_fires_nothing() {
    let o = mmnet(&["run", "--net", &net("splitter"), "--max-steps", "0"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("steps: 0\n"));
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mmnet");
    fs::write(
        &bad,
        "net bad\nplaces { place p : int\n place q : str }\ntransitions { transition t { in p (x)\n out q (x) } }\n",
    )
    .unwrap();
    let o = mmnet(&["run", "--net", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("type(F_out(t,p)) = color(p)"), "{}", stderr(&o));

    fs::write(&bad, "net bad\nplaces { place p : strr }\n").unwrap();
    let o = mmnet(&["lint", "--net", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "{}").unwrap();
    let o = mmnet(&["run", "--net", &net("splitter"), "--objects", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = mmnet(&["run", "--net", dir.path().join("missing.mmnet").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn reach_reports_witness_or_verdict() {
    let o = mmnet(&["reach", "ch_out", "--net", &net("filter")], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("witness: [Accept]"));
    let landscape = nets().join("filter-landscape.ttl");
    let o = mmnet(
        &["reach", "ch_out", "--net", &net("filter"), "--triples", landscape.to_str().unwrap(), "--max-steps", "10"],
        None,
    );
    assert!(stdout(&o).starts_with("not reachable: ch_out"), "{}", stdout(&o));
    let o = mmnet(&["reach", "nowhere", "--net", &net("filter")], None);
    assert_eq!(o.status.code(), Some(3));
}

fn count(out: &str, key: &str) -> usize {
    out.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
}

#[test]
fn canonical_exploration_is_no_larger() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("lts.dot");
    let exact = mmnet(&["explore", "--net", &net("splitter"), "--dot", dot.to_str().unwrap()], None);
    let canon = mmnet(&["explore", "--net", &net("splitter"), "--canonicalize"], None);
    assert!(count(&stdout(&canon), "states:") <= count(&stdout(&exact), "states:"));
    assert!(stdout(&exact).contains("truncated: no"));
    let dot = fs::read_to_string(dot).unwrap();
    assert_eq!(dot.matches(" -> ").count(), count(&stdout(&exact), "edges:"));
    let par = mmnet(&["explore", "--net", &net("splitter"), "--parallel"], None);
    assert_eq!(par.stdout, exact.stdout);
    let small = mmnet(&["explore", "--net", &net("splitter"), "--max-states", "5"], None);
    assert!(stdout(&small).contains("truncated: max-states"));
}

#[test]
fn scripted_session_matches_run() {
    let run = mmnet(&["run", "--net", &net("splitter")], None);
    let steps = count(&stdout(&run), "steps:");
    let script = "0\n".repeat(steps) + "q\n";
    let session = mmnet(&["step", "--net", &net("splitter")], Some(&script));
    assert_eq!(session.status.code(), Some(0));
    assert_eq!(last_line(&session), last_line(&run));
}

#[test]
fn session_lists_undoes_and_reprompts() {
    let session = mmnet(&["step", "--net", &net("filter")], Some("7\n0\nu\nm\ns\nq\n"));
    let out = stdout(&session);
    assert!(out.contains("  [0] Accept "));
    assert!(out.contains("state 1: Images with Tags:1 ch_out:1"));
    assert!(out.contains("invalid selection `7`"));
    assert!(out.contains("ch_in: (\"i1\", @a1)"));
    assert!(out.contains("\"i1\" mmdb:containsObj \"human\" ."));
    assert!(last_line(&session).starts_with("final: ch_in:1"));
}

#[test]
fn session_prompts_for_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(net("splitter")).unwrap().replace("  supply n = [\"f0\", \"f1\"]\n", "");
    let path = dir.path().join("splitter.mmnet");
    fs::write(&path, text).unwrap();
    for f in ["splitter.ttl", "image-2faces.json"] {
        fs::copy(nets().join(f), dir.path().join(f)).unwrap();
    }
    let session = mmnet(&["step", "--net", path.to_str().unwrap()], Some("0\noops\n\"face\"\n0\nq\n"));
    let out = stdout(&session);
    assert!(out.contains("value for n: "), "{out}");
    assert!(out.contains("invalid value"));
    assert!(out.contains("n=\"face\""));

    let supply = dir.path().join("names.txt");
    fs::write(&supply, "n = [\"a\", \"b\"]\n").unwrap();
    let o = mmnet(&["run", "--net", path.to_str().unwrap(), "--supply", supply.to_str().unwrap()], None);
    assert!(stdout(&o).contains("n=\"b\""));
}

#[test]
fn out_dir_receives_final_storage() {
    let dir = tempfile::tempdir().unwrap();
    let o = mmnet(&["run", "--net", &net("detector"), "--out-dir", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let md = fs::read_to_string(dir.path().join("metadata.ttl")).unwrap();
    assert!(md.contains("\"i1\" mmdb:faceCount \"2\" ."));
    assert!(md.contains("\"i1\" mmdb:prodCount \"1\" ."));
    assert!(dir.path().join("objects.json").exists());
    assert_eq!(fs::read_to_string(dir.path().join("trace.tsv")).unwrap().lines().count(), count(&stdout(&o), "steps:"));
}

#[test]
fn patterns_are_emitted() {
    for name in ["splitter", "filter", "enricher", "detector", "pipeline"] {
        let o = mmnet(&["patterns", "emit", name], None);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), mmnet::patterns::emit(name).unwrap());
    }
    assert_eq!(mmnet(&["patterns", "emit", "router"], None).status.code(), Some(2));
}

#[test]
fn shipped_nets_lint_clean() {
    for name in ["splitter", "filter", "enricher", "detector", "pipeline"] {
        let o = mmnet(&["lint", "--net", &net(name)], None);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}
