//! Desk-scale acceptance run. Each item runs the corresponding experiment at its
//! default configuration and prints one PASS/FAIL line; the process exits
//! nonzero if any item fails.

use std::process::ExitCode;
use std::time::Instant;

use spde_frame::experiments::{run, ExperimentConfig, ExperimentKind, RunReport};
use spde_frame::report::{Check, Verdict};

struct Item {
    title: &'static str,
    pass: bool,
    detail: String,
}

fn execute(kind: ExperimentKind) -> (RunReport, f64) {
    let cfg = ExperimentConfig::defaults(kind);
    let start = Instant::now();
    let out = run(&cfg).unwrap_or_else(|e| panic!("{} failed to run: {e}", cfg.name()));
    (out.report, start.elapsed().as_secs_f64())
}

/// Judges the checks of `report` selected by `pick`. An empty selection fails.
fn judge(title: &'static str, report: &RunReport, pick: impl Fn(&Check) -> bool) -> Item {
    let chosen: Vec<&Check> = report.checks.iter().filter(|c| pick(c)).collect();
    let failed: Vec<String> = chosen
        .iter()
        .filter(|c| c.verdict != Verdict::Pass)
        .map(|c| format!("{} = {:.4e} (tol {:.4e})", c.name, c.value, c.tolerance))
        .collect();
    let pass = !chosen.is_empty() && failed.is_empty();
    let detail = if chosen.is_empty() {
        "no matching checks".to_string()
    } else if failed.is_empty() {
        format!("{} checks", chosen.len())
    } else {
        failed.join("; ")
    };
    Item { title, pass, detail }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut items = Vec::new();

    let (dil, dil_secs) = execute(ExperimentKind::DilationCheck);
    let mut diagram = judge("dilation diagram pi U_t l = S_t", &dil, |c| c.name == "max diagram error");
    if dil_secs >= 1.0 {
        diagram.pass = false;
        diagram.detail.push_str(&format!("; took {dil_secs:.2}s, limit 1s"));
    }
    items.push(diagram);
    items.push(judge("adjointness and isometry of l", &dil, |c| {
        c.name.starts_with("max |<l v") || c.name.starts_with("max | |l v|")
    }));

    let (rt, _) = execute(ExperimentKind::FrameRoundtrip);
    items.push(judge("frame round trip Gamma(Delta(v)) = v", &rt, |_| true));

    let (corr, _) = execute(ExperimentKind::Correspondence);
    items.push(judge("correspondence X = Gamma(Y) under refinement", &corr, |_| true));

    let (ito, _) = execute(ExperimentKind::ItoApprox);
    items.push(judge("staged Ito approximation", &ito, |_| true));

    let (tan, _) = execute(ExperimentKind::Tanaka);
    items.push(judge("Tanaka second moments", &tan, |c| {
        ["1", "2", "3"]
            .iter()
            .any(|k| c.name == format!("|mean X^{k}(1)^2 - oracle|"))
    }));
    items.push(judge("Tanaka driver covariation <<B>> = Qt", &tan, |c| c.name.starts_with("|<<B>>")));
    items.push(judge("uniqueness in law (KS)", &tan, |c| c.name.starts_with("KS ")));
    let mut pathwise = judge("pathwise non-uniqueness", &tan, |c| {
        c.name == "sign-flip residual" || c.name.starts_with("P(sup 2|X^1|")
    });
    if let Some(n) = tan.counts.get("excluded zero-state steps") {
        pathwise.detail.push_str(&format!(", {n} zero-state steps excluded"));
    }
    items.push(pathwise);
    items.push(judge("Phi(B) reconstruction and refinement", &tan, |c| {
        c.name.starts_with("mean sup|X^") || c.name.starts_with("|refined/coarse")
    }));

    let (mono, _) = execute(ExperimentKind::Monotone);
    items.push(judge("monotone certificate and Gronwall bound", &mono, |_| true));

    let (again, _) = execute(ExperimentKind::Tanaka);
    let same = again.without_timing().to_json() == tan.without_timing().to_json();
    items.push(Item {
        title: "reproducible report for identical config and seed",
        pass: same,
        detail: if same { "tanaka run repeated".into() } else { "reports differ".into() },
    });

    let mut failed = 0;
    for it in &items {
        println!("{} {:<52} {}", if it.pass { "PASS" } else { "FAIL" }, it.title, it.detail);
        failed += usize::from(!it.pass);
    }
    println!(
        "{} of {} passed in {:.1}s",
        items.len() - failed,
        items.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
