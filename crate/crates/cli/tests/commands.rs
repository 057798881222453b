use mpss_cli::format::MatrixFile;
use mpss_cli::record::read_records;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn mpss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpss"))
        .args(args)
        .current_dir(dir)
        .env("MPSS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = mpss(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn simulate(dir: &Path, config: &str, out: &str) {
    let cfg = write_config(dir, &format!("{out}.cfg"), config);
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out], dir);
}

const BIVARIATE: &str = "seed = 11\n[model]\npreset = bivariate\nsigma_o = 0.1\n";

#[test]
fn simulate_writes_expected_dims_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, BIVARIATE, "one");
    simulate(d, BIVARIATE, "two");
    let y = MatrixFile::read(&d.join("one/Y.mpss")).unwrap();
    assert_eq!(y.dims(), &[5, 200, 1]);
    for f in ["X.mpss", "Y.mpss", "A.mpss", "B.mpss", "manifest.txt"] {
        assert_eq!(fs::read(d.join("one").join(f)).unwrap(), fs::read(d.join("two").join(f)).unwrap(), "{f}");
    }
    let manifest = fs::read_to_string(d.join("one/manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 11") && manifest.contains("file.Y.mpss = 5x200x1"));

    simulate(d, "[model]\npreset = three-variate\n", "three");
    assert_eq!(MatrixFile::read(&d.join("three/Y.mpss")).unwrap().dims(), &[5, 240, 1]);
    assert_eq!(MatrixFile::read(&d.join("three/A.mpss")).unwrap().dims(), &[3, 3, 3]);

    simulate(d, "[model]\npreset = event-related\nn = 12\nm = 8\ne = 3\n", "event");
    let y = MatrixFile::read(&d.join("event/Y.mpss")).unwrap();
    assert_eq!((y.dims()[0], y.dims()[2]), (8, 3));
    assert_eq!(MatrixFile::read(&d.join("event/onsets.mpss")).unwrap().dims(), &[3]);
}

fn fit_config(dir: &Path, solver: &str, extra: &str) -> PathBuf {
    write_config(
        dir,
        &format!("fit_{solver}.cfg"),
        &format!("seed = 11\n[model]\npreset = bivariate\nsigma_o = 0.1\n[solver]\nname = {solver}\n{extra}\n[io]\ny = data/Y.mpss\nb = data/B.mpss\nx = data/X.mpss\n"),
    )
}

fn final_objective(path: &Path) -> f64 {
    *MatrixFile::read(path).unwrap().data().last().unwrap()
}

#[test]
fn fit_reports_iterations_and_solvers_agree() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, BIVARIATE, "data");
    let cfg = fit_config(d, "ssals", "tol = 1e-10");
    ok(&["fit", "--config", cfg.to_str().unwrap(), "--out", "als"], d);
    let rec = &read_records(&d.join("als/fit.tsv")).unwrap()[0];
    assert!(rec.converged);
    assert!((3..=20).contains(&rec.iterations), "{}", rec.iterations);
    assert_eq!(rec.rse.len(), 2);
    assert!(rec.rse.iter().all(|&r| r < 5.0));
    assert_eq!(MatrixFile::read(&d.join("als/x_hat.mpss")).unwrap().dims(), &[2, 200, 1]);

    let cfg = fit_config(d, "hgdals", "tol = 1e-10");
    ok(&["fit", "--config", cfg.to_str().unwrap(), "--out", "hyb"], d);
    let (fa, fh) = (final_objective(&d.join("als/trace.mpss")), final_objective(&d.join("hyb/trace.mpss")));
    assert!((fa - fh).abs() <= 1e-8 * fa.abs(), "{fa} {fh}");

    // Positional inputs override [io].
    let cfg = fit_config(d, "ssals", "max_iter = 0");
    ok(&["fit", "data/Y.mpss", "data/B.mpss", "--config", cfg.to_str().unwrap(), "--out", "zero"], d);
    let rec = &read_records(&d.join("zero/fit.tsv")).unwrap()[0];
    assert!(!rec.converged);
    assert_eq!(rec.iterations, 0);
}

#[test]
fn cv_grid_sizes_fold_counts_and_thread_determinism() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, BIVARIATE, "data");
    let one = write_config(
        d,
        "one.cfg",
        "seed = 3\n[model]\npreset = bivariate\n[solver]\ntol = 1e-4\n[cv]\nlambda = 0.1\n[io]\ny = data/Y.mpss\nb = data/B.mpss\n",
    );
    ok(&["cv", "--config", one.to_str().unwrap(), "--out", "one"], d);
    assert_eq!(MatrixFile::read(&d.join("one/pe.mpss")).unwrap().dims(), &[1]);

    let line = write_config(
        d,
        "line.cfg",
        "seed = 3\n[model]\npreset = bivariate\n[solver]\ntol = 1e-4\nmax_iter = 2000\n[cv]\nk = 5\nlambda = logspace(0.01, 1, 21)\n\
         [io]\ny = data/Y.mpss\nb = data/B.mpss\n",
    );
    ok(&["cv", "--config", line.to_str().unwrap(), "--out", "t1", "--threads", "1"], d);
    ok(&["cv", "--config", line.to_str().unwrap(), "--out", "t2", "--threads", "2"], d);
    let axes = fs::read_to_string(d.join("t1/pe_axes.txt")).unwrap();
    assert!(axes.contains("fold_fits = 105"), "{axes}");
    let pe = MatrixFile::read(&d.join("t1/pe.mpss")).unwrap();
    assert_eq!(pe.dims(), &[21]);
    assert!(pe.data().iter().all(|v| v.is_finite() && *v > 0.0));
    for f in ["pe.mpss", "x_hat.mpss", "a_hat.mpss", "cv_grid.tsv"] {
        assert_eq!(fs::read(d.join("t1").join(f)).unwrap(), fs::read(d.join("t2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn eval_scores_truth_perfectly_and_warns_without_coordinates() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, "seed = 5\n[model]\npreset = resting-state\nn = 20\nm = 10\n", "data");
    ok(&["eval", "data/X.mpss", "data/X.mpss", "--out", "plain", "--top-k", "7"], d);
    let text = fs::read_to_string(d.join("plain/eval.tsv")).unwrap();
    assert!(text.contains("# warning: no source coordinates"));
    let rec = &read_records(&d.join("plain/eval.tsv")).unwrap()[0];
    // Inactive sources have no defined RSE.
    assert_eq!(rec.rse.iter().filter(|r| r.is_nan()).count(), 15);
    assert!(rec.rse.iter().filter(|r| !r.is_nan()).all(|&r| r == 0.0));
    assert_eq!(rec.rrse, 0.0);
    assert_eq!(rec.aroc, 1.0);
    let saliency = fs::read_to_string(d.join("plain/saliency.tsv")).unwrap();
    assert_eq!(saliency.lines().count(), 1 + 7);

    let cfg = write_config(d, "eval.cfg", "[io]\nx_hat = data/X.mpss\nx = data/X.mpss\ncoords = data/coords.mpss\nactive = data/active.mpss\n");
    ok(&["eval", "--config", cfg.to_str().unwrap(), "--out", "full"], d);
    let rec = &read_records(&d.join("full/eval.tsv")).unwrap()[0];
    assert_eq!((rec.aroc, rec.awroc), (1.0, 1.0));
    let saliency = fs::read_to_string(d.join("full/saliency.tsv")).unwrap();
    assert_eq!(saliency.lines().count(), 1 + 20);
}

#[test]
fn mc_aggregates_and_pinned_replications_have_zero_error() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = write_config(
        d,
        "mc.cfg",
        "seed = 1\n[model]\npreset = bivariate\n[mc]\nreps = 2\npin_seeds = true\nsolvers = ssals, hgdals\n",
    );
    ok(&["mc", "--config", cfg.to_str().unwrap(), "--out", "pinned"], d);
    let summary = fs::read_to_string(d.join("pinned/mc_summary.tsv")).unwrap();
    let a00 = summary.lines().find(|l| l.starts_with("ssals\ta1[0][0]")).unwrap();
    let cells: Vec<&str> = a00.split('\t').collect();
    assert_eq!(cells[3], "0");
    assert_eq!(read_records(&d.join("pinned/mc_records.tsv")).unwrap().len(), 4);

    let cfg = write_config(d, "mc2.cfg", "seed = 1\n[model]\npreset = bivariate\n[mc]\nreps = 6\nsolvers = ssals, ssgd\n");
    ok(&["mc", "--config", cfg.to_str().unwrap(), "--out", "a", "--threads", "1"], d);
    ok(&["mc", "--config", cfg.to_str().unwrap(), "--out", "b", "--threads", "3"], d);
    let ra = read_records(&d.join("a/mc_records.tsv")).unwrap();
    let rb = read_records(&d.join("b/mc_records.tsv")).unwrap();
    assert_eq!(ra.len(), 12);
    let ids: Vec<usize> = ra.iter().map(|r| r.run_id).collect();
    assert_eq!(ids, (0..12).collect::<Vec<_>>());
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x.deterministic_part(), y.deterministic_part());
    }
    let summary = fs::read_to_string(d.join("a/mc_summary.tsv")).unwrap();
    let line = summary.lines().find(|l| l.starts_with("ssals\ta1[1][0]")).unwrap();
    let mean: f64 = line.split('\t').nth(2).unwrap().parse().unwrap();
    assert!((mean - 0.7).abs() < 0.1, "{mean}");

    let bad = write_config(d, "mc3.cfg", "[mc]\nreps = 1\n");
    assert_eq!(mpss(&["mc", "--config", bad.to_str().unwrap()], d).status.code(), Some(3));
}

#[test]
fn exit_codes_are_distinct() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, BIVARIATE, "data");

    let bad = write_config(d, "bad.cfg", "[model]\ncolour = blue\n");
    assert_eq!(mpss(&["simulate", "--config", bad.to_str().unwrap()], d).status.code(), Some(3));

    fs::write(d.join("junk.mpss"), b"not a matrix").unwrap();
    assert_eq!(mpss(&["fit", "junk.mpss", "data/B.mpss"], d).status.code(), Some(4));

    let diverge = write_config(d, "div.cfg", "[solver]\nname = ssgd\nalpha = 1e4\nmomentum = 0.5\n");
    assert_eq!(
        mpss(&["fit", "data/Y.mpss", "data/B.mpss", "--config", diverge.to_str().unwrap()], d).status.code(),
        Some(5)
    );

    // Zero observations give zero states and a singular coefficient system.
    let zero = MatrixFile::new(vec![5, 50], vec![0.0; 250]).unwrap();
    zero.write(&d.join("zero.mpss")).unwrap();
    assert_eq!(mpss(&["fit", "zero.mpss", "data/B.mpss"], d).status.code(), Some(6));

    assert_eq!(mpss(&["fit", "missing.mpss", "data/B.mpss"], d).status.code(), Some(7));

    // N*T above the guardrail for the banded solver.
    let big_b = MatrixFile::new(vec![2, 1001], vec![0.5; 2002]).unwrap();
    big_b.write(&d.join("bigB.mpss")).unwrap();
    let big_y = MatrixFile::new(vec![2, 200], vec![0.1; 400]).unwrap();
    big_y.write(&d.join("bigY.mpss")).unwrap();
    let out = mpss(&["fit", "bigY.mpss", "bigB.mpss"], d);
    assert_eq!(out.status.code(), Some(8));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
}

#[test]
fn convert_round_trips_csv() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulate(d, BIVARIATE, "data");
    ok(&["convert", "data/B.mpss", "b.csv"], d);
    ok(&["convert", "b.csv", "b.mpss"], d);
    assert_eq!(fs::read(d.join("b.mpss")).unwrap(), fs::read(d.join("data/B.mpss")).unwrap());
    assert_eq!(mpss(&["convert", "data/Y.mpss", "y.csv"], d).status.code(), Some(4));
}
