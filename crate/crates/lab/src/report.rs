//! JSON views of the core result types.

use loewner_lab_core::energies::{Case, ExponentTable, PotentialReport, Slot};
use loewner_lab_core::loewner::DrivingFunction;
use loewner_lab_core::optimizer::OptimizerResult;
use loewner_lab_core::verifier::{ExponentReport, IdentityReport, OmReport, UniformReport};
use loewner_lab_core::Estimate;
use serde_json::{json, Value};

pub fn estimate(e: &Estimate) -> Value {
    let mut v = json!({
        "mean": e.mean,
        "stderr": e.stderr,
        "n": e.n_samples,
        "seed": e.seed,
    });
    if let Some(w) = &e.window {
        v["t_min"] = json!(w.t_min);
        v["t_max"] = json!(w.t_max);
        v["box"] = json!(w.root_box);
        v["bias_bound"] = json!(w.bias_bound);
    }
    v
}

pub fn potential(r: &PotentialReport) -> Value {
    json!({
        "total": r.total,
        "stderr": r.stderr,
        "energy": r.energy,
        "horizon": r.horizon,
        "truncated": r.truncated,
        "terms": r.terms.iter().map(|t| json!({"name": t.name, "value": t.value, "stderr": t.stderr})).collect::<Vec<_>>(),
    })
}

pub fn driving(d: &DrivingFunction) -> Value {
    json!({"kind": d.kind.as_str(), "grid": d.grid, "values": d.values})
}

pub fn case(c: &Case) -> Value {
    let mut v = json!({"name": c.name()});
    match *c {
        Case::ForcedChordal { rho } | Case::ForcedRadial { rho } => v["rho"] = json!(rho),
        Case::MultiChordal { n } => v["n"] = json!(n),
        Case::MultiRadial { n, mu } => {
            v["n"] = json!(n);
            v["mu"] = json!(mu);
        }
        _ => {}
    }
    v
}

pub fn exponent_table(t: &ExponentTable) -> Value {
    let exps: Vec<Value> = t
        .exponents
        .iter()
        .map(|e| {
            let slot = match e.slot {
                Slot::Boundary { count } => json!({"boundary": count}),
                Slot::Interior => json!("interior"),
            };
            json!({
                "slot": slot,
                "weight": e.weight,
                "weight_over_c_limit": e.weight_over_c_limit,
                "deformation": e.deformation,
                "e_kappa": e.e_kappa,
                "ratio_coefficient": e.ratio_coefficient,
            })
        })
        .collect();
    json!({
        "kappa": t.kappa,
        "case": case(&t.case),
        "c": t.c,
        "b": t.b,
        "b_tilde": t.b_tilde,
        "b1": t.b1,
        "b2": t.b2,
        "b3": t.b3,
        "alpha": t.alpha,
        "beta": t.beta,
        "b_tilde_n": t.b_tilde_n,
        "exponents": exps,
    })
}

pub fn exponent_report(r: &ExponentReport) -> Value {
    json!({
        "pass": r.pass,
        "checks": r.checks.iter().map(|c| json!({
            "case": case(&c.case),
            "family": c.family,
            "count": c.count,
            "kappa": c.kappa,
            "numeric": c.numeric,
            "closed_form": c.closed_form,
            "error": c.error,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
    })
}

pub fn identity(r: &IdentityReport) -> Value {
    json!({
        "case": r.case,
        "before": potential(&r.before),
        "after": potential(&r.after),
        "lhs": r.lhs,
        "log_derivatives": r.log_derivatives,
        "coefficients": r.coefficients,
        "derivative_term": r.derivative_term,
        "loop_difference": estimate(&r.loop_difference),
        "rhs": r.rhs,
        "discrepancy": r.discrepancy,
        "stderr": r.stderr,
        "tolerance": r.tolerance,
        "pass": r.pass,
    })
}

pub fn om(r: &OmReport) -> Value {
    json!({
        "kappa": r.kappa,
        "potential_term": r.potential_term,
        "boundary_term": r.boundary_term,
        "target": r.target,
        "log_kernel_ratio": r.log_kernel_ratio,
        "points": r.points.iter().map(|p| json!({
            "eps": p.eps,
            "p_base": p.p_base,
            "p_image": p.p_image,
            "log_ratio": p.log_ratio,
            "stderr": p.stderr,
            "gap": p.gap,
            "allowance": p.allowance,
            "pass": p.pass,
        })).collect::<Vec<_>>(),
        "failures": r.failures,
        "gap_slope": r.gap_slope,
        "gap_decreasing": r.gap_decreasing,
        "allowance_decreasing": r.allowance_decreasing,
        "final_pass": r.final_pass,
        "pass": r.pass,
    })
}

pub fn uniform(r: &UniformReport) -> Value {
    json!({
        "gamma": r.gamma,
        "gamma_stderr": r.gamma_stderr,
        "points": r.points.iter().map(|p| json!({
            "eps": p.eps,
            "sup": p.sup,
            "inf": p.inf,
            "width": p.width,
            "width_stderr": p.width_stderr,
            "brackets_gamma": p.brackets_gamma,
        })).collect::<Vec<_>>(),
        "narrowing_sigmas": r.narrowing_sigmas,
        "total_narrowing_sigma": r.total_narrowing_sigma,
        "pass": r.pass,
    })
}

pub fn optimizer(r: &OptimizerResult) -> Value {
    json!({
        "drivers": r.drivers.iter().map(driving).collect::<Vec<_>>(),
        "report": potential(&r.report),
        "trace": r.trace,
        "refreshes": r.refreshes,
        "iterations": r.iterations,
        "rejected_steps": r.rejected_steps,
        "grad_norm": r.grad_norm,
        "stop": r.stop,
        "loop_mode": r.loop_mode,
    })
}
