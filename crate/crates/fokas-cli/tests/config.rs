use fokas_cli::{CliError, Mode, Overrides, RunConfig};

#[test]
fn command_line_overrides_the_file() {
    let text = "[run]\nmode = zeros\nseed = 3\n[problem]\nbenchmark = alpha0-poly\n[contour]\neta = 0.7\n";
    let cfg = RunConfig::parse(text, &Overrides::default()).unwrap();
    assert_eq!(cfg.mode, Mode::Zeros);
    assert_eq!(cfg.settings.contour.eta, Some(0.7));
    assert_eq!(cfg.seed, 3);
    let cli = Overrides { mode: Some("solve".into()), eta: Some(0.6), seed: Some(9), ..Overrides::default() };
    let cfg = RunConfig::parse(text, &cli).unwrap();
    assert_eq!(cfg.mode, Mode::Solve);
    assert_eq!(cfg.settings.contour.eta, Some(0.6));
    assert_eq!(cfg.seed, 9);
}

#[test]
fn explicit_problem_and_grid() {
    let text = "[problem]\ndomain = interval\nlength = 2\nalpha = 0.25\nq0 = exp(-x^2)\nf0 = 0\ng0 = 0\n[grid]\nx_max = 2\nnx = 5\nt_max = 0.5\nnt = 3\n";
    let cfg = RunConfig::parse(text, &Overrides::default()).unwrap();
    assert_eq!(cfg.problem.length(), 2.0);
    assert_eq!(cfg.problem.alpha, 0.25);
    assert_eq!(cfg.grid.xs(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert_eq!(cfg.grid.ts(), vec![0.0, 0.25, 0.5]);
    let echo = cfg.echo();
    assert!(echo.contains("theta_max = auto"), "{echo}");
}

#[test]
fn rejections() {
    let bad = [
        "[problem]\nbenchmark = alpha0-poly\nbenchmark = alpha1-sine\n",
        "[problem]\nbenchmark = alpha0-poly\n[grid]\nx_max = 2\n",
        "[problem]\nbenchmark = alpha0-poly\n[evaluator]\norder = 1\n",
        "[problem]\nbenchmark = alpha0-poly\n[colours]\nred = 1\n",
        "[problem]\ndomain = interval\nlength = 1\nalpha = 0\nq0 = sin(\nf0 = 0\ng0 = 0\n",
    ];
    for text in bad {
        let e = RunConfig::parse(text, &Overrides::default()).unwrap_err();
        assert!(matches!(e, CliError::Config(_)), "{text}");
        assert_eq!(e.exit_code(), 2);
    }
}
