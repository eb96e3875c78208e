//! One runner per experiment. Each builds its cells, evaluates them in
//! parallel and returns rows in cell order.

use ndarray::Array2;
use rayon::prelude::*;

use cvq_core::hilbert::{self, hermite_functions, wigner, CvDensity, CvState};
use cvq_core::oracle;
use cvq_core::protocol::{
    optimize_lambda_for, sinc_projection, tilde0, Evaluator, Protocol, ProtocolParams, Tilde0Method, EDGE_LIMIT,
    SQUEEZE_PRODUCT,
};
use cvq_core::randgen::{self, RandomStateSpec};
use cvq_core::register::{grid_point, SignVector};
use cvq_core::Error;

use crate::config::{ExperimentConfig, InputSpec, LambdaChoice};
use crate::dump::{self, Dump};
use crate::output::{fmt_float, ResultRow};
use crate::CliError;

/// Rows plus any files requested through `dump_dir`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub dumps: Vec<Dump>,
}

/// Streams of one `nbar` value start at `index << 32`.
pub const STREAM_STRIDE: u64 = 1 << 32;

pub fn run(c: &ExperimentConfig) -> Result<Report, CliError> {
    use crate::config::Experiment::*;
    match c.experiment {
        SweepLambda => sweep_lambda(c),
        FockScaling => fock_scaling(c),
        RandomEnsemble => random_ensemble(c),
        NoiseSweep => noise_sweep(c),
        CatDemo => cat_demo(c),
        Tilde0Report => tilde0_report(c),
    }
}

fn method_name(m: Tilde0Method) -> &'static str {
    match m {
        Tilde0Method::SincProjection => "sinc-projection",
        Tilde0Method::IteratedEncode => "iterated-encode",
        Tilde0Method::Squeezed => "squeezed",
    }
}

/// Population allowed above the level that sets the support radius.
pub const SUPPORT_TAIL: f64 = 1e-8;

/// Classical turning point of the lowest level above which less than
/// [`SUPPORT_TAIL`] of the population lies.
pub fn support_radius(state: &CvState) -> f64 {
    let pops = state.populations();
    let mut tail = 0.0;
    let mut top = 0;
    for (n, p) in pops.iter().enumerate().rev() {
        tail += p;
        if tail >= SUPPORT_TAIL {
            top = n;
            break;
        }
    }
    (2.0 * top as f64 + 1.0).sqrt()
}

fn join_diag(parts: Vec<String>) -> String {
    parts.into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join("; ")
}

fn truncation_diag(params: &ProtocolParams, state: &CvState) -> String {
    match params.truncation_warning(support_radius(state)) {
        Some(w) => {
            log::debug!("{w}");
            format!("warning: {w}")
        }
        None => String::new(),
    }
}

fn lambdas(c: &ExperimentConfig) -> &[f64] {
    match &c.lambda {
        LambdaChoice::Values(v) => v,
        LambdaChoice::Optimize => &[],
    }
}

fn file_label(s: &str) -> String {
    s.chars().map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' { ch } else { '-' }).collect()
}

fn symmetric_grid(extent: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -extent + 2.0 * extent * i as f64 / (n - 1) as f64).collect()
}

fn grid_min(w: &Array2<f64>) -> f64 {
    w.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `⟨q|ρ|q⟩` on a grid.
pub fn q_marginal(rho: &CvDensity, qgrid: &[f64]) -> Vec<f64> {
    let d = rho.dim();
    let re = rho.matrix().mapv(|z| z.re);
    let mut h = vec![0.0; d];
    qgrid
        .iter()
        .map(|&q| {
            hermite_functions(q, d, &mut h);
            let hv = ndarray::ArrayView1::from(&h[..]);
            hv.dot(&re.dot(&hv))
        })
        .collect()
}

fn protocols(keys: &[(f64, usize)], dim: usize) -> Result<Vec<Protocol>, CliError> {
    keys.par_iter()
        .map(|&(l, n)| Ok(Protocol::new(ProtocolParams::new(l, n, dim)?)?))
        .collect()
}

fn sweep_lambda(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let inputs: Vec<CvState> = c.inputs.iter().map(|s| s.build(c.dim, c.seed)).collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for i in 0..inputs.len() {
        for &n in &c.n_qubits {
            for &l in lambdas(c) {
                cells.push((i, n, l));
            }
        }
    }
    let evaluator = c.evaluator.evaluator(c.dim);
    let rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|&(i, n, l)| -> Result<ResultRow, CliError> {
            let params = ProtocolParams::new(l, n, c.dim)?;
            let mut row = ResultRow::new(name, c.inputs[i].to_string());
            row.n_qubits = Some(n);
            row.lambda = Some(l);
            let mut diag = vec![truncation_diag(&params, &inputs[i])];
            match evaluator {
                Evaluator::Fock { .. } => {
                    let proto = Protocol::new(params)?;
                    let reg = proto.encoded_register(&inputs[i])?;
                    row.epsilon = Some(reg.epsilon);
                    if reg.edge_population > EDGE_LIMIT {
                        diag.push(format!("unresolved: edge_population={}", fmt_float(reg.edge_population)));
                    }
                    if c.fidelity {
                        row.fidelity = Some(proto.overlap_recovery(&inputs[i], None)?.1);
                    }
                }
                Evaluator::Position => {
                    row.epsilon = Some(oracle::position_epsilon(&inputs[i], l, n)?);
                    if c.fidelity {
                        diag.push("fidelity needs the fock evaluator".into());
                    }
                }
            }
            row.diagnostics = join_diag(diag);
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    Ok(Report { rows, dumps: Vec::new() })
}

fn fock_scaling(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let inputs: Vec<CvState> = c.inputs.iter().map(|s| s.build(c.dim, c.seed)).collect::<Result<_, _>>()?;
    let evaluator = c.evaluator.evaluator(c.dim);
    let mut cells = Vec::new();
    for i in 0..inputs.len() {
        for &n in &c.n_qubits {
            match &c.lambda {
                LambdaChoice::Optimize => cells.push((i, n, None)),
                LambdaChoice::Values(v) => cells.extend(v.iter().map(|&l| (i, n, Some(l)))),
            }
        }
    }
    let rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|&(i, n, fixed)| -> Result<ResultRow, CliError> {
            let mut row = ResultRow::new(name, c.inputs[i].to_string());
            row.n_qubits = Some(n);
            let mut diag = Vec::new();
            let found = match fixed {
                Some(l) => evaluator.epsilon(&inputs[i], l, n).map(|e| (l, e, 1)),
                None => optimize_lambda_for(&inputs[i], n, evaluator, c.lambda_range)
                    .map(|o| (o.lambda, o.value, o.evaluations)),
            };
            match found {
                Ok((l, e, evals)) => {
                    row.lambda = Some(l);
                    diag.push(truncation_diag(&ProtocolParams::new(l, n, c.dim)?, &inputs[i]));
                    if e.is_finite() {
                        row.epsilon = Some(e);
                    } else {
                        diag.push("unresolved at this truncation".into());
                    }
                    if fixed.is_none() {
                        diag.push(format!("evaluations={evals}"));
                        let (lo, hi) = c.lambda_range;
                        if l <= lo * (1.0 + 1e-9) || l >= hi * (1.0 - 1e-9) {
                            diag.push("optimum at the edge of lambda_range".into());
                        }
                    }
                }
                Err(Error::Truncation { .. }) => {
                    diag.push(format!("unresolved: no lambda in the range fits dim={}", c.dim));
                }
                Err(e) => return Err(e.into()),
            }
            row.diagnostics = join_diag(diag);
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    Ok(Report { rows, dumps: Vec::new() })
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn random_ensemble(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let mut rows = Vec::new();
    let evaluator = c.evaluator.evaluator(c.dim);
    for (bi, &nbar) in c.nbar.iter().enumerate() {
        let states: Vec<CvState> = (0..c.count as u64)
            .into_par_iter()
            .map(|i| {
                let spec = RandomStateSpec::new(nbar, c.seed, c.dim).with_stream(bi as u64 * STREAM_STRIDE + i);
                randgen::random_state(&spec)
            })
            .collect::<Result<_, _>>()?;
        for &n in &c.n_qubits {
            let (lambda, how) = match &c.lambda {
                LambdaChoice::Values(v) => (v[0], String::new()),
                LambdaChoice::Optimize => {
                    let m = nbar.round() as usize;
                    let probe = hilbert::fock(c.dim, m)?;
                    let opt = optimize_lambda_for(&probe, n, evaluator, c.lambda_range)?;
                    (opt.lambda, format!("lambda optimised on fock:{m}"))
                }
            };
            let proto = Protocol::new(ProtocolParams::new(lambda, n, c.dim)?)?;
            let results: Vec<(f64, f64, String)> = states
                .par_iter()
                .map(|s| {
                    let (e, f) = proto.overlap_recovery(s, None)?;
                    Ok((e, f, truncation_diag(proto.params(), s)))
                })
                .collect::<Result<_, CliError>>()?;
            for (i, (e, f, warn)) in results.iter().enumerate() {
                let stream = bi as u64 * STREAM_STRIDE + i as u64;
                let mut row = ResultRow::new(name, InputSpec::Random { nbar, stream }.to_string());
                row.n_qubits = Some(n);
                row.lambda = Some(lambda);
                row.param_name = "nbar".into();
                row.param_value = Some(nbar);
                row.epsilon = Some(*e);
                row.fidelity = Some(*f);
                row.diagnostics = warn.clone();
                rows.push(row);
            }
            for (stat, pick) in [("epsilon", 0usize), ("fidelity", 1)] {
                let xs: Vec<f64> = results.iter().map(|r| if pick == 0 { r.0 } else { r.1 }).collect();
                let (mean, std) = mean_std(&xs);
                let mut row = ResultRow::new(name, format!("random:{nbar}"));
                row.n_qubits = Some(n);
                row.lambda = Some(lambda);
                row.param_name = "nbar".into();
                row.param_value = Some(nbar);
                row.mean = Some(mean);
                row.std = Some(std);
                row.diagnostics = join_diag(vec![format!("summary of {stat} over {} states", xs.len()), how.clone()]);
                rows.push(row);
            }
        }
    }
    Ok(Report { rows, dumps: Vec::new() })
}

fn noise_sweep(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let inputs: Vec<CvState> = c.inputs.iter().map(|s| s.build(c.dim, c.seed)).collect::<Result<_, _>>()?;
    let keys: Vec<(f64, usize)> = c
        .n_qubits
        .iter()
        .flat_map(|&n| lambdas(c).iter().map(move |&l| (l, n)))
        .collect();
    let protos = protocols(&keys, c.dim)?;
    let mut cells = Vec::new();
    for i in 0..inputs.len() {
        for p in 0..protos.len() {
            for &ch in &c.channels {
                for &x in &c.noise {
                    cells.push((i, p, ch, x));
                }
            }
        }
    }
    let grid = symmetric_grid(c.wigner_extent, c.wigner_points);
    let out: Vec<(ResultRow, Option<Dump>)> = cells
        .par_iter()
        .map(|&(i, p, ch, x)| -> Result<_, CliError> {
            let proto = &protos[p];
            let channel = ch.build(x)?;
            let rec = proto.recover(&inputs[i], Some(&channel))?;
            let w = wigner(&rec.recovered, &grid, &grid);
            let params = proto.params();
            let mut row = ResultRow::new(name, c.inputs[i].to_string());
            row.n_qubits = Some(params.n_qubits());
            row.lambda = Some(params.lambda());
            row.param_name = ch.name().into();
            row.param_value = Some(x);
            row.epsilon = Some(rec.epsilon);
            row.fidelity = Some(rec.fidelity);
            row.diagnostics = join_diag(vec![
                format!("wigner_min={}", fmt_float(grid_min(&w))),
                format!("branches={}", rec.branches_decoded),
                truncation_diag(params, &inputs[i]),
            ]);
            let dump = c.dump_dir.as_ref().map(|_| {
                let label = format!(
                    "{name}_{}_N{}_l{}_{}{}.txt",
                    c.inputs[i],
                    params.n_qubits(),
                    params.lambda(),
                    ch.name(),
                    x
                );
                dump::wigner_dump(&file_label(&label), c.dim, &grid, &grid, &w)
            });
            Ok((row, dump))
        })
        .collect::<Result<_, _>>()?;
    let (rows, dumps): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(Report {
        rows,
        dumps: dumps.into_iter().flatten().collect(),
    })
}

/// Largest maximum of `values` on each side of zero, as grid positions.
pub fn lobes(qgrid: &[f64], values: &[f64]) -> (f64, f64) {
    let side = |pos: bool| {
        qgrid
            .iter()
            .zip(values)
            .filter(|(q, _)| if pos { **q > 0.0 } else { **q < 0.0 })
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(f64::NAN, |(q, _)| *q)
    };
    (side(false), side(true))
}

fn cat_demo(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let label = format!("cat:{}", c.alpha);
    let input = hilbert::cat(c.dim, c.alpha)?;
    let grid = symmetric_grid(c.wigner_extent, c.wigner_points);
    let fine: Vec<f64> = symmetric_grid(c.wigner_extent, 100 * (c.wigner_points - 1) + 1);
    let mut rows = Vec::new();
    let mut dumps = Vec::new();
    for &n in &c.n_qubits {
        for &l in lambdas(c) {
            let params = ProtocolParams::new(l, n, c.dim)?;
            let proto = Protocol::new(params)?;
            let enc = proto.encode(&input)?;
            let reg = proto.encoded_register(&input)?;
            let rec = proto.recover(&input, None)?;
            let states = [
                ("input", input.to_density()),
                ("encoded", enc.reduced_cv()?),
                ("recovered", rec.recovered.clone()),
            ];
            let ws: Vec<Array2<f64>> = states.iter().map(|(_, rho)| wigner(rho, &grid, &grid)).collect();
            let (lo, hi) = lobes(&fine, &q_marginal(&rec.recovered, &fine));
            let mut row = ResultRow::new(name, label.clone());
            row.n_qubits = Some(n);
            row.lambda = Some(l);
            row.epsilon = Some(rec.epsilon);
            row.fidelity = Some(rec.fidelity);
            row.diagnostics = join_diag(vec![
                format!("lobe_minus={}", fmt_float(lo)),
                format!("lobe_plus={}", fmt_float(hi)),
                format!("input_wigner_min={}", fmt_float(grid_min(&ws[0]))),
                format!("recovered_wigner_min={}", fmt_float(grid_min(&ws[2]))),
                truncation_diag(&params, &input),
            ]);
            rows.push(row);

            // register probabilities in the sign-vector basis, ordered by grid point
            let norm = 1.0 - reg.epsilon;
            let phi = reg.phi_amplitudes();
            let mut entries: Vec<(f64, usize, f64)> = (0..phi.len())
                .map(|s| {
                    let sv = SignVector::from_index(s, n);
                    (grid_point(&sv, l), s, phi[s].norm_sqr() / norm)
                })
                .collect();
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            let qs: Vec<f64> = entries.iter().map(|e| e.0).collect();
            let sampled = hilbert::wavefunction(&input, &qs);
            for ((q, s, prob), psi) in entries.into_iter().zip(sampled) {
                let mut r = ResultRow::new(name, label.clone());
                r.n_qubits = Some(n);
                r.lambda = Some(l);
                r.param_name = "q_s".into();
                r.param_value = Some(q);
                r.mean = Some(prob);
                r.diagnostics = format!("s={s}; sampled_input={}", fmt_float(2.0 * l * psi.norm_sqr()));
                rows.push(r);
            }

            if c.dump_dir.is_some() {
                for ((tag, _), w) in states.iter().zip(&ws) {
                    let f = file_label(&format!("{name}_{label}_N{n}_l{l}_{tag}_wigner.txt"));
                    dumps.push(dump::wigner_dump(&f, c.dim, &grid, &grid, w));
                }
                let f = file_label(&format!("{name}_{label}_input_state.txt"));
                dumps.push(dump::state_dump(&f, input.amps().as_slice().expect("contiguous")));
            }
        }
    }
    Ok(Report { rows, dumps })
}

fn tilde0_report(c: &ExperimentConfig) -> Result<Report, CliError> {
    let name = c.experiment.name();
    let mut cells = Vec::new();
    for &l in lambdas(c) {
        for &m in &c.methods {
            cells.push((l, m));
        }
    }
    let refs: Vec<(f64, CvState)> = lambdas(c)
        .par_iter()
        .map(|&l| Ok((l, sinc_projection(l, c.dim)?.state)))
        .collect::<Result<_, CliError>>()?;
    let rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|&(l, m)| -> Result<ResultRow, CliError> {
            let n = if m == Tilde0Method::IteratedEncode { c.iterated_n_qubits } else { 2 };
            let params = ProtocolParams::new(l, n, c.dim)?;
            let reference = &refs.iter().find(|(x, _)| *x == l).expect("reference per lambda").1;
            let mut row = ResultRow::new(name, method_name(m));
            row.lambda = Some(l);
            if m == Tilde0Method::IteratedEncode {
                row.n_qubits = Some(n);
            }
            let t = match tilde0(&params, m) {
                Ok(t) => t,
                Err(Error::Truncation { leakage, .. }) => {
                    row.diagnostics = format!("unresolved: leakage={} at dim={}", fmt_float(leakage), c.dim);
                    return Ok(row);
                }
                Err(e) => return Err(e.into()),
            };
            row.param_name = "reference_dim".into();
            row.param_value = Some(t.report.reference_dim as f64);
            row.fidelity = Some(hilbert::fidelity_pure(reference, &t.state)?);
            let r = &t.report;
            let mut diag = vec![
                format!("retained_norm={}", fmt_float(r.retained_norm)),
                format!("quadrature_error={}", fmt_float(r.quadrature_error)),
                format!("quadrature_tolerance={}", fmt_float(r.quadrature_tolerance)),
                format!("integration_range={}", fmt_float(r.integration_range)),
                format!("evaluations={}", r.evaluations),
            ];
            if m == Tilde0Method::Squeezed {
                let sq = (SQUEEZE_PRODUCT / l).ln();
                diag.push(format!("r={}", fmt_float(sq)));
                diag.push(format!("closed_form={}", fmt_float(oracle::squeezed_overlap(l, sq))));
            }
            row.diagnostics = join_diag(diag);
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    Ok(Report { rows, dumps: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, ExperimentConfig};
    use std::collections::BTreeMap;

    fn config(text: &str) -> ExperimentConfig {
        let map: BTreeMap<String, String> = crate::config::parse_pairs(text).unwrap();
        ExperimentConfig::from_pairs(&map).unwrap()
    }

    #[test]
    fn sweep_row_count_is_cartesian() {
        let c = config("experiment = sweep-lambda\ndim = 80\ninputs = vacuum,fock:1\nn_qubits = 3,4\nlambda = 0.2,0.3,0.4");
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 2 * 2 * 3);
        assert_eq!(r.rows[0].input, "vacuum");
        assert_eq!(r.rows[0].n_qubits, Some(3));
        assert_eq!(r.rows[1].lambda, Some(0.3));
        assert!(r.rows.iter().all(|x| x.fidelity.is_none()));
    }

    #[test]
    fn sweep_with_fidelity_obeys_sandwich() {
        let c = config("experiment = sweep-lambda\ndim = 100\ninputs = fock:1\nn_qubits = 4\nlambda = 0.15,0.3\nfidelity = true");
        for row in run(&c).unwrap().rows {
            let (e, f) = (row.epsilon.unwrap(), row.fidelity.unwrap());
            assert!((1.0 - e).powi(2) - 1e-6 <= f && f <= 1.0 - e + 1e-6);
        }
    }

    #[test]
    fn fock_scaling_row_count() {
        let c = config("experiment = fock-scaling\ninputs = fock:1,fock:3\nn_qubits = 3..5\nlambda = 0.2");
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 2 * 3);
        assert!(r.rows.iter().all(|x| x.epsilon.is_some()));
    }

    #[test]
    fn ensemble_rows_and_summaries() {
        let c = config("experiment = random-ensemble\ndim = 80\nnbar = 1\ncount = 5\nn_qubits = 4\nlambda = 0.2");
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 5 + 2);
        let eps: Vec<f64> = r.rows[..5].iter().map(|x| x.epsilon.unwrap()).collect();
        let (m, s) = mean_std(&eps);
        assert_eq!(r.rows[5].mean, Some(m));
        assert_eq!(r.rows[5].std, Some(s));
        assert_eq!(r.rows[4].input, "random:1:4");
    }

    #[test]
    fn support_radius_uses_tail_mass() {
        let x = hilbert::fock(50, 7).unwrap();
        assert!((support_radius(&x) - 15f64.sqrt()).abs() < 1e-12);
        assert_eq!(support_radius(&hilbert::vacuum(50).unwrap()), 1.0);
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn lobes_pick_each_side() {
        let q = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let v = [0.1, 0.9, 1.0, 0.2, 0.8];
        assert_eq!(lobes(&q, &v), (-1.0, 2.0));
    }

    #[test]
    fn marginal_of_vacuum() {
        let rho = hilbert::vacuum(20).unwrap().to_density();
        let m = q_marginal(&rho, &[0.0, 1.0]);
        let pi = std::f64::consts::PI;
        assert!((m[0] - pi.powf(-0.5)).abs() < 1e-12);
        assert!((m[1] - pi.powf(-0.5) * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn tilde0_rows() {
        let c = config("experiment = tilde0-report\ndim = 120\nlambda = 0.3\niterated_n_qubits = 4");
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.rows[0].input, "sinc-projection");
        assert!((r.rows[0].fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.rows[2].diagnostics.contains("closed_form="));
        assert_eq!(c.experiment, Experiment::Tilde0Report);
    }
}
