use std::fs;

use clap::Args;
use serde_json::json;

use rlab::geometry::{Alphabet, EndPrefix, Ray, ReducedWord, TreePoint};
use rlab::kernels::{ancona_harnack_check, tree_boundary_kernel, NnKernels};
use rlab::matrix_boundary::{lambda_z, martin_kernel_matrix, BallSystem};
use rlab::presets::{preset, Preset};
use rlab::products::{cartesian_asymptotics, identify_equivalent_boundary, ProductKernel, ProductPoint};
use rlab::reduced::{detect_r_mu, GroupKernel, ProductGroupKernel};
use rlab::scalar::Arithmetic;
use rlab::series::{phi_ratio_limit, PuiseuxTable};
use rlab::walks::{fit_local_limit, ratio_sequence, spectral_radius, trace, EngineOptions, WalkSpec};
use rlab::{Error, Result};

use crate::output::Table;
use crate::{Command, Global, WalkArgs};

pub fn dispatch(cmd: &Command, g: &Global) -> Result<Table> {
    match cmd {
        Command::TreeKernel(a) => tree_kernel(a, g),
        Command::FreeKernel(a) => free_kernel(a, g),
        Command::RatioConverge(a) => ratio_converge(a, g),
        Command::LltFit(a) => llt_fit(a, g),
        Command::MartinMatrix(a) => martin_matrix(a, g),
        Command::Product(a) => product(a, g),
        Command::Reduced(a) => reduced(a, g),
        Command::AnconaCheck(a) => ancona(a, g),
        Command::PhiClaim(a) => phi_claim(a, g),
    }
}

fn load(w: &WalkArgs, default: &str) -> Result<Preset> {
    match (&w.preset, &w.spec) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read spec file {}: {e}", path.display())))?;
            Ok(Preset::Walk(WalkSpec::parse(&text)?))
        }
        (Some(name), None) => preset(name),
        (None, None) => preset(default),
    }
}

fn load_walk(w: &WalkArgs, default: &str) -> Result<WalkSpec> {
    Ok(load(w, default)?.walk()?.clone())
}

fn arithmetic(g: &Global) -> Arithmetic {
    if g.precision <= 64 {
        Arithmetic::NATIVE
    } else {
        Arithmetic::from_bits(g.precision)
    }
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidInput(format!("window must be lo:hi with 1 <= lo < hi, got '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo >= hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn default_ray(a: &Alphabet) -> Result<Ray> {
    Ray::new(a, &[], &[1, 2])
}

fn parse_ray(a: &Alphabet, s: &Option<String>) -> Result<Ray> {
    match s {
        Some(s) => Ray::parse(a, s),
        None => default_ray(a),
    }
}

/// Base points from `--x` (words, or `ray:k` for the k-th vertex of the end)
/// or, when none are given, the ball of radius `ball`.
fn base_points(a: &Alphabet, xs: &[String], ball: usize, ray: &Ray) -> Result<Vec<ReducedWord>> {
    if xs.is_empty() {
        return Ok(a.ball(ball));
    }
    xs.iter()
        .map(|s| match s.strip_prefix("ray:") {
            Some(k) => {
                let k: usize = k.parse().map_err(|_| Error::InvalidInput(format!("bad ray vertex '{s}'")))?;
                Ok(ray.vertex(k))
            }
            None => a.parse(s),
        })
        .collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| Error::InvalidInput(format!("bad {what} list '{s}'"))))
        .collect()
}

#[derive(Args, Debug)]
pub struct TreeKernelArgs {
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    /// Base point; repeatable. `ray:k` selects the k-th vertex of the end.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Vec<String>,
    /// Radius of the base-point ball used when no --x is given.
    #[arg(long, default_value_t = 3)]
    pub x_ball: usize,
    /// End as `head|period`, letters comma-separated.
    #[arg(long)]
    pub end: Option<String>,
}

const KERNEL_COLUMNS: [&str; 6] = ["x", "end", "depth", "value", "error", "stabilized"];

fn tree_kernel(a: &TreeKernelArgs, g: &Global) -> Result<Table> {
    if a.q < 2 {
        return Err(Error::InvalidInput(format!("--q must be at least 2, got {}", a.q)));
    }
    let alphabet = Alphabet::tree(a.q);
    let ray = parse_ray(&alphabet, &a.end)?;
    let tol = g.tol.unwrap_or(1e-10);
    let mut t = Table::new("tree-kernel", &KERNEL_COLUMNS);
    for x in base_points(&alphabet, &a.x, a.x_ball, &ray)? {
        let v = tree_boundary_kernel(a.q, &x, &ray, a.depth, tol)?;
        t.push(vec![x.to_string().into(), ray.to_string().into(), v.depth.into(), v.value.into(), v.error.into(), v.stabilized.into()]);
    }
    t.report = json!({ "q": a.q, "rho": 2.0 * (a.q as f64).sqrt() / (a.q as f64 + 1.0) });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct FreeKernelArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub x_ball: usize,
    #[arg(long)]
    pub end: Option<String>,
    /// Spectral parameter in (0, rho]; defaults to rho.
    #[arg(long)]
    pub t: Option<f64>,
}

fn free_kernel(a: &FreeKernelArgs, g: &Global) -> Result<Table> {
    let spec = load_walk(&a.walk, "f2-lazy-uniform")?;
    let law = spec.group_law();
    if !law.is_nearest_neighbour() {
        return Err(Error::NotNearestNeighbour("free-kernel needs a nearest-neighbour walk; use martin-matrix".into()));
    }
    let k = NnKernels::new(&law)?;
    let t_param = a.t.unwrap_or_else(|| k.rho());
    let alphabet = law.alphabet();
    let ray = parse_ray(&alphabet, &a.end)?;
    let tol = g.tol.unwrap_or(1e-10);
    let mut t = Table::new("free-kernel", &KERNEL_COLUMNS);
    for x in base_points(&alphabet, &a.x, a.x_ball, &ray)? {
        let v = k.martin(&x, &ray, a.depth, t_param, tol)?;
        t.push(vec![x.to_string().into(), ray.to_string().into(), v.depth.into(), v.value.into(), v.error.into(), v.stabilized.into()]);
    }
    t.report = json!({ "r": k.r(), "rho": k.rho(), "t": t_param });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct RatioConvergeArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Target of p^(n)(e, x).
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    /// Emit every k-th admissible n; defaults to about 50 rows.
    #[arg(long)]
    pub every: Option<usize>,
    /// Live-state budget of the sparse engine.
    #[arg(long, default_value_t = 4_000_000)]
    pub max_states: usize,
}

fn ratio_converge(a: &RatioConvergeArgs, g: &Global) -> Result<Table> {
    if a.n_max < 1 {
        return Err(Error::InvalidInput("--n-max must be at least 1".into()));
    }
    let spec = load_walk(&a.walk, "z-lazy")?;
    let alphabet = spec.alphabet();
    let x = alphabet.parse(&a.x)?;
    let opts = EngineOptions { max_states: a.max_states, ..EngineOptions::default() };
    let seq = ratio_sequence(&spec, &ReducedWord::identity(), &x, a.n_max, arithmetic(g), &opts)?;
    let every = a.every.unwrap_or((seq.n.len() / 50).max(1)).max(1);
    let mut t = Table::new("ratio-converge", &["n", "ratio", "change"]);
    let mut prev: Option<f64> = None;
    let last = seq.n.len().saturating_sub(1);
    for (i, (n, v)) in seq.n.iter().zip(&seq.values).enumerate() {
        if i % every != 0 && i != last {
            continue;
        }
        t.push(vec![(*n).into(), (*v).into(), prev.map(|p| (v - p).abs()).into()]);
        prev = Some(*v);
    }
    t.report = json!({ "x": x.to_string(), "last": seq.last, "cauchy_tail": seq.cauchy_tail });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct LltFitArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value = "500:2000")]
    pub window: String,
    /// Target y of p^(n)(e, y).
    #[arg(long, default_value = "e", allow_hyphen_values = true)]
    pub y: String,
    #[arg(long, default_value_t = 4_000_000)]
    pub max_states: usize,
}

fn llt_fit(a: &LltFitArgs, g: &Global) -> Result<Table> {
    let spec = load_walk(&a.walk, "f2-lazy-uniform")?;
    let window = parse_window(&a.window)?;
    let y = spec.alphabet().parse(&a.y)?;
    let opts = EngineOptions { max_states: a.max_states, ..EngineOptions::default() };
    let tr = trace(&spec, &[y.clone()], window.1, arithmetic(g), &opts)?;
    let fit = fit_local_limit(&tr.column(0), window)?;
    let sens = fit.sensitivity();
    let rho = spectral_radius(&spec).ok();
    let mut t = Table::new(
        "llt-fit",
        &["y", "window", "rho_hat", "rho_sensitivity", "alpha_hat", "alpha_sensitivity", "log_c", "residual"],
    );
    t.push(vec![
        y.to_string().into(),
        a.window.clone().into(),
        fit.rho_hat.into(),
        sens.map(|s| s.0).into(),
        fit.alpha_hat.into(),
        sens.map(|s| s.1).into(),
        fit.log_c.into(),
        fit.residual.into(),
    ]);
    t.report = json!({ "fit": fit, "rho": rho.map(|r| r.value), "engine": tr.kind });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct MartinMatrixArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub x_ball: usize,
    #[arg(long)]
    pub end: Option<String>,
    /// Prefix depth; defaults to ten blocks.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Block index k; defaults to the smallest admissible one.
    #[arg(long)]
    pub k: Option<usize>,
    /// Include Fb(w|r) for this word in the JSON report.
    #[arg(long)]
    pub dump: Option<String>,
}

fn martin_matrix(a: &MartinMatrixArgs, g: &Global) -> Result<Table> {
    let spec = load_walk(&a.walk, "f2-lazy-uniform")?;
    let law = spec.group_law();
    let sys = BallSystem::new(&law)?;
    let sing = sys.singularity()?;
    let pm = sys.at(sing.r)?;
    let alphabet = law.alphabet();
    let ray = parse_ray(&alphabet, &a.end)?;
    let d = sys.ball().block();
    let depth = a.depth.unwrap_or(10 * d);
    let tol = g.tol.unwrap_or(1e-10);
    let xi = ray.prefix(depth);
    let mut t = Table::new("martin-matrix", &["x", "end", "depth", "k", "value", "error", "contraction_rate", "stabilized"]);
    let mut rates = Vec::new();
    for x in base_points(&alphabet, &a.x, a.x_ball, &ray)? {
        let v = martin_kernel_matrix(&pm, &x, &xi, a.k, tol)?;
        let c = &v.contraction;
        rates.push(c.rate);
        let shift = if (v.k + 2) * d <= depth {
            (martin_kernel_matrix(&pm, &x, &xi, Some(v.k + 1), tol)?.value - v.value).abs()
        } else {
            0.0
        };
        let err = shift.max(c.agreement);
        t.push(vec![
            x.to_string().into(),
            ray.to_string().into(),
            depth.into(),
            v.k.into(),
            v.value.into(),
            err.into(),
            c.rate.into(),
            (err <= tol * v.value.abs()).into(),
        ]);
    }
    let dump = match &a.dump {
        Some(w) => Some(pm.dump(&alphabet.parse(w)?)),
        None => None,
    };
    t.report = json!({
        "r": sing.r,
        "bracket": sing.bracket,
        "ball_size": sys.ball().len(),
        "range": sys.ball().range(),
        "connectivity": sys.ball().connectivity(),
        "block": d,
        "lambda_r": lambda_z(&sys, sing.r)?,
        "max_contraction_rate": rates.iter().cloned().fold(0.0, f64::max),
        "dump": dump,
    });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct ProductArgs {
    #[arg(long, default_value = "t3xZ")]
    pub preset: String,
    #[arg(long, default_value = "2000:8000")]
    pub window: String,
    /// Radius of the probe ball for the boundary identification.
    #[arg(long, default_value_t = 1)]
    pub probe_radius: usize,
    /// Prefix depth of the boundary candidates.
    #[arg(long, default_value_t = 24)]
    pub depth: usize,
}

fn product(a: &ProductArgs, g: &Global) -> Result<Table> {
    let pw = preset(&a.preset)?.product()?.clone();
    let s = pw.s().ok_or_else(|| Error::InvalidInput("product asymptotics need a Cartesian product".into()))?;
    let window = parse_window(&a.window)?;
    let e = ReducedWord::identity();
    let opts = EngineOptions::default();
    let arith = arithmetic(g);
    let factor = |spec: &WalkSpec| -> Result<(f64, rlab::walks::LocalLimitFit)> {
        let rho = spectral_radius(spec)?.value;
        let tr = trace(spec, &[e.clone()], window.1, arith, &opts)?;
        Ok((rho, fit_local_limit(&tr.column(0), window)?))
    };
    let (rho1, fit1) = factor(&pw.first)?;
    let (rho2, fit2) = factor(&pw.second)?;
    let predicted = cartesian_asymptotics(s, (rho1, fit1.alpha_hat), (rho2, fit2.alpha_hat));
    let seq = pw.sequence((&e, &e), window.1, &opts)?;
    let fit = fit_local_limit(&seq, window)?;
    let tol = g.tol.unwrap_or(1e-6);

    let mut t = Table::new("product", &["quantity", "value", "error"]);
    let sens = |f: &rlab::walks::LocalLimitFit| f.sensitivity().unwrap_or((f64::NAN, f64::NAN));
    t.push(vec!["rho_1".into(), rho1.into(), (fit1.rho_hat - rho1).abs().into()]);
    t.push(vec!["alpha_1".into(), fit1.alpha_hat.into(), sens(&fit1).1.into()]);
    t.push(vec!["rho_2".into(), rho2.into(), (fit2.rho_hat - rho2).abs().into()]);
    t.push(vec!["alpha_2".into(), fit2.alpha_hat.into(), sens(&fit2).1.into()]);
    t.push(vec!["rho_predicted".into(), predicted.rho.into(), (fit.rho_hat - predicted.rho).abs().into()]);
    t.push(vec!["alpha_predicted".into(), predicted.alpha.into(), (fit.alpha_hat - predicted.alpha).abs().into()]);
    t.push(vec!["rho_hat".into(), fit.rho_hat.into(), sens(&fit).0.into()]);
    t.push(vec!["alpha_hat".into(), fit.alpha_hat.into(), sens(&fit).1.into()]);

    let kernel = ProductKernel::new(&pw)?;
    let (a1, a2) = (pw.first.alphabet(), pw.second.alphabet());
    let ray1 = default_ray(&a1)?;
    let ray2 = Ray::new(&a2, &[], &[1])?;
    let back2 = Ray::new(&a2, &[], &[a2.inverse(1)])?;
    let end = |r: &Ray| TreePoint::End(EndPrefix(r.prefix(a.depth).word().clone()));
    let mut candidates = Vec::new();
    for y1 in a1.ball(1) {
        candidates.push(ProductPoint { first: TreePoint::Vertex(y1.clone()), second: end(&ray2) });
        candidates.push(ProductPoint { first: TreePoint::Vertex(y1), second: end(&back2) });
    }
    candidates.push(ProductPoint { first: end(&ray1), second: TreePoint::Vertex(e.clone()) });
    candidates.push(ProductPoint { first: end(&ray1), second: end(&ray2) });
    let mut probes = Vec::new();
    for x1 in a1.ball(a.probe_radius) {
        for x2 in a2.ball(a.probe_radius) {
            probes.push((x1.clone(), x2));
        }
    }
    let classes = identify_equivalent_boundary(&kernel, &candidates, &probes, tol)?;
    let named: Vec<Vec<String>> = classes.iter().map(|c| c.iter().map(|&i| candidates[i].to_string()).collect()).collect();
    t.report = json!({
        "preset": a.preset,
        "s": s,
        "window": window,
        "factors": [fit1, fit2],
        "predicted": predicted,
        "measured": fit,
        "boundary_classes": named,
        "tol": tol,
    });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct ReducedArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 4)]
    pub candidate_radius: usize,
    #[arg(long, default_value_t = 4)]
    pub probe_radius: usize,
}

fn reduced(a: &ReducedArgs, g: &Global) -> Result<Table> {
    let tol = g.tol.unwrap_or(1e-6);
    let report = match load(&a.walk, "f2-lazy-uniform")? {
        Preset::Walk(spec) => detect_r_mu(&GroupKernel::new(&spec)?, a.candidate_radius, a.probe_radius, tol)?,
        Preset::Product(pw) => detect_r_mu(&ProductGroupKernel::new(&pw)?, a.candidate_radius, a.probe_radius, tol)?,
    };
    let mut t = Table::new("reduced", &["y", "deviation", "tol", "member", "class"]);
    for (y, dev) in report.candidates.iter().zip(&report.deviations) {
        let class = report.classes.iter().position(|c| c.contains(y)).unwrap_or(usize::MAX);
        t.push(vec![
            y.clone().into(),
            (*dev).into(),
            tol.into(),
            report.r_mu_members.contains(y).into(),
            class.into(),
        ]);
    }
    t.report = serde_json::to_value(&report)?;
    Ok(t)
}

#[derive(Args, Debug)]
pub struct AnconaArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "4,6,8,10")]
    pub distances: String,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

fn ancona(a: &AnconaArgs, _g: &Global) -> Result<Table> {
    let spec = load_walk(&a.walk, "f2-lazy-uniform")?;
    let law = spec.group_law();
    if !law.is_nearest_neighbour() {
        return Err(Error::NotNearestNeighbour("ancona-check needs a nearest-neighbour walk".into()));
    }
    let distances: Vec<usize> = parse_list(&a.distances, "distance")?;
    let k = NnKernels::new(&law)?;
    let r = k.r();
    let f = k.sys.solve(r)?;
    let g0 = k.sys.green_from(r, &f);
    let green = |v: &ReducedWord| Ok(g0 * k.sys.word_passage_from(&f, v));
    let rep = ancona_harnack_check(&law.alphabet(), green, r, &distances, a.samples, a.seed)?;
    let mut t = Table::new("ancona-check", &["distance", "samples", "min_ratio", "max_ratio", "spread", "harnack"]);
    for b in &rep.brackets {
        t.push(vec![
            b.distance.into(),
            b.samples.into(),
            b.min_ratio.into(),
            b.max_ratio.into(),
            ((b.max_ratio - b.min_ratio) / b.min_ratio).into(),
            b.harnack.into(),
        ]);
    }
    t.report = json!({ "report": rep, "constant_spread": rep.constant_spread() });
    Ok(t)
}

#[derive(Args, Debug)]
pub struct PhiClaimArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    pub x: String,
    #[arg(long)]
    pub end: Option<String>,
    #[arg(long, default_value = "2,4,6,8,10")]
    pub depths: String,
    /// Offsets below r used for the extrapolation.
    #[arg(long, default_value = "1e-6,1e-8")]
    pub eps: String,
}

fn phi_claim(a: &PhiClaimArgs, g: &Global) -> Result<Table> {
    let spec = load_walk(&a.walk, "f2-lazy-uniform")?;
    let law = spec.group_law();
    let k = NnKernels::new(&law)?;
    let alphabet = law.alphabet();
    let ray = parse_ray(&alphabet, &a.end)?;
    let x = alphabet.parse(&a.x)?;
    let depths: Vec<usize> = parse_list(&a.depths, "depth")?;
    let eps: Vec<f64> = parse_list(&a.eps, "eps")?;
    if eps.len() < 2 {
        return Err(Error::InvalidInput("--eps needs at least two offsets".into()));
    }
    let tol = g.tol.unwrap_or(1e-13);
    let table = PuiseuxTable::new(&k.sys)?;
    let mut t = Table::new("phi-claim", &["y", "length", "ratio", "error", "gamma_ratio", "claim_gap", "shells"]);
    for d in depths {
        let y = ray.vertex(d);
        let lim = phi_ratio_limit(&k.sys, &x, &y, &eps, tol)?;
        let n = lim.ratios.len();
        let err = (lim.ratios[n - 1] - lim.ratios[n - 2]).abs();
        let oracle = table.gamma(&alphabet.relative(&x, &y)) / table.gamma(&y);
        t.push(vec![
            y.to_string().into(),
            d.into(),
            lim.limit.into(),
            err.into(),
            oracle.into(),
            (lim.limit - 1.0).abs().into(),
            lim.shells.iter().copied().max().unwrap_or(0).into(),
        ]);
    }
    t.report = json!({ "x": x.to_string(), "end": ray.to_string(), "eps": eps });
    Ok(t)
}
