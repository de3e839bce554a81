//! End-to-end runs of the installed binary: the model/forward/invert/report
//! pipeline in a scratch directory, exit-code conventions, file formats, and
//! rerun determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wipr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wipr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(out));
}

const INVERT_CFG: &str = "\
initial_model = start.wmod
true_model = truth.wmod
data = obs.wdat
output_dir = out
frequencies = 6,8
schedule = 6;8
mode = wipr-first-batch
max_iters = 3
eps_source = 0
eps_data = 0
pml_thickness = 3
sources_x = 4:3:16
sources_z = 4
receivers_x = 3:1:17
receivers_z = 12
emit_images = true
";

fn prepare_scenario(dir: &Path) {
    assert_ok(&wipr(
        dir,
        &[
            "model", "--kind", "inclusion", "--nx", "21", "--nz", "16", "--h", "25", "--v",
            "2000,2300", "--rect", "8,12,6,9", "--out", "truth.wmod", "--image", "truth.pgm",
        ],
    ));
    assert_ok(&wipr(
        dir,
        &[
            "model", "--kind", "homogeneous", "--nx", "21", "--nz", "16", "--h", "25", "--v",
            "2000", "--out", "start.wmod",
        ],
    ));
    assert_ok(&wipr(
        dir,
        &[
            "forward",
            "--model",
            "truth.wmod",
            "--frequencies",
            "6,8",
            "--sources-x",
            "4:3:16",
            "--sources-z",
            "4",
            "--receivers-x",
            "3:1:17",
            "--receivers-z",
            "12",
            "--pml-thickness",
            "3",
            "--out",
            "obs.wdat",
        ],
    ));
    fs::write(dir.join("invert.cfg"), INVERT_CFG).unwrap();
}

#[test]
fn pipeline_runs_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare_scenario(dir);

    assert!(dir.join("truth.wmod").exists());
    assert_eq!(&fs::read(dir.join("truth.wmod")).unwrap()[..4], b"WIPR");
    assert_eq!(&fs::read(dir.join("obs.wdat")).unwrap()[..4], b"WIPD");

    let run1 = wipr(dir, &["invert", "--config", "invert.cfg"]);
    assert_ok(&run1);
    let csv1 = fs::read(dir.join("out/iterations.csv")).unwrap();
    let model1 = fs::read(dir.join("out/final_model.wmod")).unwrap();
    assert!(dir.join("out/batch_00.pgm").exists());
    assert!(dir.join("out/batch_01.pgm").exists());

    // The log is fully structured: seed line, fixed header, one row per
    // iteration with the global counter and the per-batch mode.
    let text = String::from_utf8(csv1.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=0");
    assert_eq!(
        lines[1],
        "iter,freq_batch,mode,data_residual,source_residual,model_error,lambda,seconds"
    );
    assert_eq!(lines.len(), 2 + 6);
    for (k, row) in lines[2..].iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], format!("{}", k + 1));
        assert_eq!(fields[2], if k < 3 { "wipr" } else { "irwri" });
        assert!(fields[5].parse::<f64>().unwrap() > 0.0, "model error column");
        assert!(fields[6].parse::<f64>().unwrap() > 0.0, "lambda column");
        assert_eq!(fields[7], "0", "timing is off by default");
    }

    let run2 = wipr(dir, &["invert", "--config", "invert.cfg"]);
    assert_ok(&run2);
    assert_eq!(fs::read(dir.join("out/iterations.csv")).unwrap(), csv1);
    assert_eq!(fs::read(dir.join("out/final_model.wmod")).unwrap(), model1);
    assert_eq!(run2.stdout, run1.stdout);

    fs::copy(dir.join("out/iterations.csv"), dir.join("run_a.csv")).unwrap();
    fs::copy(dir.join("out/iterations.csv"), dir.join("run_b.csv")).unwrap();
    let rep = wipr(dir, &["report", "run_a.csv", "run_b.csv"]);
    assert_ok(&rep);
    let rep_lines: Vec<String> = stdout(&rep).lines().map(String::from).collect();
    assert_eq!(rep_lines[0], "run,model_error,source_residual,data_residual");
    assert!(rep_lines[1].starts_with("run_a,"));
    assert!(rep_lines[2].starts_with("run_b,"));
    assert_eq!(rep_lines[1].split(',').count(), 4);
    assert_eq!(rep_lines[1][6..], rep_lines[2][6..]);
}

#[test]
fn seed_flag_is_recorded_in_every_output_header() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare_scenario(dir);
    assert_ok(&wipr(dir, &["invert", "--config", "invert.cfg", "--seed", "9"]));
    let text = fs::read_to_string(dir.join("out/iterations.csv")).unwrap();
    assert!(text.starts_with("# seed=9\n"));
    let pgm = fs::read(dir.join("out/batch_00.pgm")).unwrap();
    let head = String::from_utf8_lossy(&pgm[..40]);
    assert!(head.starts_with("P5\n# seed=9\n21 16\n255\n"), "got {head:?}");
}

#[test]
fn model_image_is_a_well_formed_pgm() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&wipr(
        dir,
        &[
            "model", "--kind", "layered", "--nx", "30", "--nz", "20", "--h", "25", "--v",
            "1800,2400,3000", "--interfaces", "6,13", "--out", "m.wmod", "--image", "m.pgm",
        ],
    ));
    let bytes = fs::read(dir.join("m.pgm")).unwrap();
    let header = b"P5\n# seed=0\n30 20\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 30 * 20);
    // Min-max scaling puts both extremes in the image: slowest layer maps
    // to one end of the ramp, fastest to the other.
    let pixels = &bytes[header.len()..];
    assert!(pixels.contains(&0));
    assert!(pixels.contains(&255));
}

#[test]
fn usage_errors_exit_two_and_runtime_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let missing_flags = wipr(dir, &["forward"]);
    assert_eq!(missing_flags.status.code(), Some(2));
    assert!(stderr(&missing_flags).starts_with("wipr: error:"));

    let unknown_subcommand = wipr(dir, &["transmogrify"]);
    assert_eq!(unknown_subcommand.status.code(), Some(2));
    assert!(stderr(&unknown_subcommand).starts_with("wipr: error:"));

    let missing_config = wipr(dir, &["invert", "--config", "nope.cfg"]);
    assert_eq!(missing_config.status.code(), Some(1));
    assert!(stderr(&missing_config).starts_with("wipr: error:"));

    let bad_kind = wipr(
        dir,
        &[
            "model", "--kind", "weird", "--nx", "5", "--nz", "5", "--h", "10", "--v", "2000",
            "--out", "m.wmod",
        ],
    );
    assert_eq!(bad_kind.status.code(), Some(1));
    assert!(stderr(&bad_kind).contains("unknown model kind"));

    let help = wipr(dir, &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("invert"));
}

#[test]
fn config_mistakes_are_reported_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare_scenario(dir);

    let cases: &[(&str, &str)] = &[
        ("typo.cfg", "bogus = 1\n"),
        ("dup.cfg", "seed = 1\nseed = 2\n"),
        ("ttknob.cfg", "tt_tv_weight = 1e-7\n"),
        ("lone.cfg", "v_min = 1500\n"),
    ];
    for (name, extra) in cases {
        fs::write(dir.join(name), format!("{INVERT_CFG}{extra}")).unwrap();
        let out = wipr(dir, &["invert", "--config", name]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(stderr(&out).starts_with("wipr: error:"), "{name}");
        assert!(!dir.join(name).with_extension("out").exists());
    }
    assert!(stderr(&wipr(dir, &["invert", "--config", "typo.cfg"])).contains("unknown key"));

    // Reading and overwriting the same file in one run is refused.
    let aliased = INVERT_CFG.replace("initial_model = start.wmod", "initial_model = out/final_model.wmod");
    fs::write(dir.join("alias.cfg"), aliased).unwrap();
    let out = wipr(dir, &["invert", "--config", "alias.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("distinct"));
}

#[test]
fn bilinear_recovery_is_exact_on_a_homogeneous_model() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&wipr(
        dir,
        &[
            "model", "--kind", "homogeneous", "--nx", "25", "--nz", "25", "--h", "20", "--v",
            "2000", "--out", "m.wmod",
        ],
    ));
    let out = wipr(
        dir,
        &[
            "bilinear",
            "--model",
            "m.wmod",
            "--freq",
            "6",
            "--source-x",
            "12",
            "--source-z",
            "12",
            "--pml-thickness",
            "6",
            "--margin",
            "7",
            "--out",
            "rec.wmod",
        ],
    );
    assert_ok(&out);
    let text = stdout(&out);
    let grab = |prefix: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(prefix))
            .unwrap_or_else(|| panic!("missing '{prefix}' in {text:?}"))
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(grab("full relative error: ") < 1e-8);
    assert!(grab("magnitude relative error: ") < 1e-8);
    assert_eq!(&fs::read(dir.join("rec.wmod")).unwrap()[..4], b"WIPR");
}
