//! Replays the construction pipeline on each catalog entry and diffs the
//! outcome against the stored expectations.

use super::*;
use crate::cartan::{
    assemble_pair, bianchi_solve, build_ortho, curvature, reductivity_check, solve_a3, two_get,
    CTensor, CartanError, ExtensionProblem, OrthoSplit,
};
use crate::chart::{
    coframe_check, curvature_stabilizer_dim, frame_curvature, killing_residual, sample_points,
    BoundMetric, CoframeExpr, MetricChart,
};
use crate::geometry::{constant_curvature_check, einstein_check, ricci_from_curvature};
use crate::liealg::{is_subalgebra, verify_pair_isomorphism, ConstPair};
use crate::linalg::{in_span, Field};
use crate::scalar::{int, rat, rational_to_f64, QSqrt2};
use num_traits::Zero;

#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Maurer-Cartan and pullback residuals
    pub coframe: f64,
    /// Ricci, Killing, frame-curvature and first-Bianchi residuals
    pub ricci: f64,
    /// covariant derivative of the curvature
    pub nabla: f64,
    /// Einstein fit residual per point
    pub einstein: f64,
    /// relative spread of the fitted Einstein constant across points
    pub lambda_spread: f64,
    /// relative singular-value cutoff for stabilizer ranks
    pub sv_rel: f64,
    /// |det g| below this rejects an evaluation point
    pub det: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coframe: 1e-10,
            ricci: 1e-9,
            nabla: 1e-8,
            einstein: 1e-9,
            lambda_spread: 1e-8,
            sv_rel: 1e-7,
            det: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub points: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            points: 100,
            seed: 42,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub id: String,
    pub kind: &'static str,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn fail(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.push(name, false, detail);
    }
}

pub fn validate(catalog: &Catalog, entry: &CatalogEntry, opts: &ValidateOptions) -> Report {
    let mut report = Report {
        id: entry.id.clone(),
        kind: entry.kind.kind_name(),
        checks: Vec::new(),
    };
    match &entry.kind {
        EntryKind::Algebra(a) => validate_algebra(a, &mut report),
        EntryKind::Extension(e) => validate_extension(catalog, e, opts, &mut report),
        EntryKind::Morphism(m) => validate_morphism(catalog, m, &mut report),
        EntryKind::Embedding(e) => validate_embedding(catalog, e, &mut report),
        EntryKind::Conjugation(c) => validate_conjugation(catalog, c, &mut report),
        EntryKind::Chart(c) => validate_chart(c, opts, &mut report),
        EntryKind::Coframe(c) => validate_coframe(catalog, c, opts, &mut report),
        EntryKind::Pullback(p) => validate_pullback(catalog, p, opts, &mut report),
    }
    report
}

pub fn validate_spaces(catalog: &Catalog, opts: &ValidateOptions) -> Vec<Report> {
    let _ = opts;
    let mut out = Vec::new();
    for (name, space) in &catalog.spaces {
        let mut report = Report {
            id: format!("space/{name}"),
            kind: "algebra-pair",
            checks: Vec::new(),
        };
        let n = space.n;
        let expected = n * (n - 1) / 2;
        report.push(
            "generator-count",
            space.gens.len() == expected,
            format!("{} of {expected}", space.gens.len()),
        );
        let mut all_skew = true;
        for (gname, g) in &space.gens {
            if !crate::liealg::is_eta_skew(&space.eta, g) {
                all_skew = false;
                report.fail("eta-skew", format!("generator {gname} is not eta-skew"));
            }
        }
        if all_skew {
            report.push("eta-skew", true, "all generators");
        }
        match crate::liealg::algebra_from_matrices(
            &space.gens.iter().map(|(_, g)| g.clone()).collect::<Vec<_>>(),
        ) {
            Ok(alg) => {
                report.push("closed-under-commutator", true, "");
                report.push("jacobi", alg.jacobi_holds(), "symbolic");
            }
            Err(e) => report.fail("closed-under-commutator", e.to_string()),
        }
        out.push(report);
    }
    out
}

fn validate_algebra(a: &AlgebraEntry, report: &mut Report) {
    report.push("jacobi", a.algebra.jacobi_holds(), "symbolic in all parameters");
    for (name, i, j, k, poly) in &a.rejected {
        let mut variant = crate::liealg::LieAlgebra::new(a.algebra.dim);
        variant.params = a.algebra.params.clone();
        for ii in 0..a.algebra.dim {
            for jj in (ii + 1)..a.algebra.dim {
                for kk in 0..a.algebra.dim {
                    if (ii, jj) == (*i, *j) {
                        continue;
                    }
                    let c = a.algebra.c(kk, ii, jj).clone();
                    if !c.is_zero() {
                        variant.add_bracket_term(ii, jj, kk, c);
                    }
                }
            }
        }
        variant.add_bracket_term(*i, *j, *k, poly.clone());
        report.push(
            format!("rejected-variant-{name}-fails-jacobi"),
            !variant.jacobi_holds(),
            "the misprinted table must not be a Lie algebra",
        );
    }
    if !a.h_span.is_empty() {
        match a.algebra.instantiate(&a.generic) {
            Ok(inst) => {
                let ok = is_subalgebra(&inst, &a.h_span);
                report.push("isotropy-subalgebra", ok, "bracket closure of the span");
            }
            Err(e) => report.fail("isotropy-subalgebra", e.to_string()),
        }
    }
    for (rank, asn) in &a.killing_rank {
        match a.algebra.killing_rank(asn) {
            Ok(r) => report.push(
                format!("killing-rank-{rank}"),
                r == *rank,
                format!("computed {r} at {asn:?}"),
            ),
            Err(e) => report.fail(format!("killing-rank-{rank}"), e.to_string()),
        }
    }
}

pub fn resolve_split(
    catalog: &Catalog,
    e: &ExtensionEntry,
) -> Result<OrthoSplit, String> {
    let space = catalog
        .spaces
        .get(&e.space)
        .ok_or_else(|| format!("unknown space `{}`", e.space))?;
    let iso: Result<Vec<_>, _> = e.iso.iter().map(|c| space.combo(c, 0)).collect();
    let comp: Result<Vec<_>, _> = e.comp.iter().map(|c| space.combo(c, 0)).collect();
    build_ortho(
        &space.eta,
        iso.map_err(|er| er.to_string())?,
        comp.map_err(|er| er.to_string())?,
    )
    .map_err(|er| er.to_string())
}

pub fn build_problem(
    catalog: &Catalog,
    e: &ExtensionEntry,
) -> Result<ExtensionProblem, String> {
    let split = resolve_split(catalog, e)?;
    let mut p: crate::linalg::Mat<Poly> = crate::linalg::Mat::zeros(split.m, split.n);
    for (r, i, poly) in &e.p_entries {
        p[(*r, *i)] = poly.clone();
    }
    let mut c = CTensor::new();
    for (al, j, k, poly) in &e.c_entries {
        c.set(*al, *j, *k, poly.clone());
    }
    let mut problem = ExtensionProblem::new(split, p, c);
    problem.domain = e.domain.clone();
    Ok(problem)
}

fn deterministic_frees(count: usize, salt: u64) -> Vec<Assignment> {
    // three small rational assignments per free-parameter vector
    let picks = [
        [int(1), int(0), int(2), rat(1, 2), int(-1), int(3), int(1), int(2), int(-2), int(1)],
        [int(0), int(1), int(-1), int(2), rat(1, 3), int(1), int(-1), rat(3, 2), int(1), int(0)],
        [rat(2, 3), int(-1), int(1), int(1), int(2), rat(-1, 2), int(3), int(1), int(1), int(1)],
    ];
    let mut out = Vec::new();
    for (k, row) in picks.iter().enumerate() {
        let mut a = Assignment::new();
        for i in 0..count {
            let v = &row[(i + salt as usize + k) % row.len()];
            a.insert(format!("p{}", i + 1), v.clone());
        }
        out.push(a);
    }
    out
}

fn validate_extension(
    catalog: &Catalog,
    e: &ExtensionEntry,
    opts: &ValidateOptions,
    report: &mut Report,
) {
    let problem = match build_problem(catalog, e) {
        Ok(p) => p,
        Err(msg) => {
            report.fail("split", msg);
            return;
        }
    };
    report.push("split", true, format!("n={} q={} m={}", problem.split.n, problem.split.q, problem.split.m));

    // isotropy condition and solution-space checks
    let sol = solve_a3(&problem.split);
    if let Some(d) = e.a3_dim {
        report.push("a3-dim", sol.dim() == d, format!("computed {}", sol.dim()));
    }
    if e.a3_exact {
        let stored = if e.p_display.is_empty() {
            problem.p_mat.clone()
        } else {
            let mut m: crate::linalg::Mat<Poly> =
                crate::linalg::Mat::zeros(problem.split.m, problem.split.n);
            for (r, i, poly) in &e.p_display {
                m[(*r, *i)] = poly.clone();
            }
            m
        };
        let auto = sol.as_poly_matrix();
        let same = (0..stored.rows).all(|r| {
            (0..stored.cols).all(|i| stored[(r, i)] == auto[(r, i)])
        });
        report.push("a3-naming-exact", same, sol.display().replace('\n', " ; "));
        if !e.p_display.is_empty() && !e.p_entries.is_empty() {
            report.push(
                "a3-span",
                sol.contains_family(&problem.p_mat),
                "branch coefficients lie in the solution space",
            );
        }
    } else if !e.p_entries.is_empty() {
        report.push(
            "a3-span",
            sol.contains_family(&problem.p_mat),
            "stored coefficients lie in the solution space",
        );
    }
    for r in crate::cartan::a3_residual(&problem.split, &problem.p_mat) {
        if !r.is_zero() {
            report.fail("a3-residual", format!("nonzero residual {r}"));
            break;
        }
    }

    // symbolic Bianchi residual with the stored data
    if e.has_curvature || !e.c_entries.is_empty() {
        let ok = problem.bianchi_residual().iter().all(|p| p.is_zero());
        report.push("bianchi-symbolic", ok, "d2 theta = d2 omega = 0 in all parameters");
    }

    // curvature table
    if e.has_curvature {
        let curv = curvature(&problem);
        let low = curv.lowered(&problem.split);
        let n = problem.split.n;
        let mut stored = vec![vec![crate::cartan::TwoForm::new(); n]; n];
        for (i, j, terms) in &e.curvature {
            let mut form = crate::cartan::TwoForm::new();
            for (coef, a, b) in terms {
                let e2 = two_get(&form, *a, *b).add(coef);
                // two-form insertion with orientation
                form.remove(&(*a.min(b), *a.max(b)));
                if a < b {
                    if !e2.is_zero() {
                        form.insert((*a, *b), e2);
                    }
                } else if !e2.is_zero() {
                    form.insert((*b, *a), e2.neg());
                }
            }
            stored[*i][*j] = form;
        }
        let mut ok = true;
        let mut detail = String::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if low[i][j] != stored[i][j] {
                    ok = false;
                    detail = format!("Omega_{}{} differs", i + 1, j + 1);
                }
            }
        }
        report.push("curvature-table", ok, detail);
        // lowered antisymmetry in the tensor indices
        let mut anti = true;
        for i in 0..n {
            for j in 0..n {
                for (&(a, b), v) in &low[i][j] {
                    if two_get(&low[j][i], a, b) != v.neg() {
                        anti = false;
                    }
                }
            }
        }
        report.push("lowered-antisymmetry", anti, "");
    }

    // symbolic Ricci
    match &e.ricci {
        RicciExpect::Unspecified => {}
        RicciExpect::Zero => {
            let ric = ricci_from_curvature(&curvature(&problem), &problem.split);
            report.push("ricci-zero", ric.is_zero(), "symbolic");
        }
        RicciExpect::Entries(list) => {
            let ric = ricci_from_curvature(&curvature(&problem), &problem.split);
            let n = problem.split.n;
            let mut expect = crate::linalg::Mat::<Poly>::zeros(n, n);
            for (i, j, p) in list {
                expect[(*i, *j)] = expect[(*i, *j)].add(p);
                if i != j {
                    expect[(*j, *i)] = expect[(*j, *i)].add(p);
                }
            }
            let ok = (0..n).all(|i| (0..n).all(|j| ric.mat[(i, j)] == expect[(i, j)]));
            report.push("ricci-symbolic", ok, "exact equality");
        }
    }

    // reductivity
    match &e.reductive {
        Some(ReductiveExpect::Always) => {
            let frees = deterministic_frees(sol.dim().max(e.params.len()), 1);
            let mut all_ok = true;
            for (k, asn) in frees.iter().enumerate() {
                // instantiate stored P parameters (falling back to auto names)
                let mut full = asn.clone();
                for p in &e.params {
                    full.entry(p.clone()).or_insert_with(|| int(1));
                }
                match reductivity_check(&problem, &full) {
                    Ok(Some(_)) => {}
                    Ok(None) => {
                        all_ok = false;
                        report.fail("reductive-always", format!("unsolvable at sample {k}"));
                    }
                    Err(er) => {
                        all_ok = false;
                        report.fail("reductive-always", er.to_string());
                    }
                }
            }
            if all_ok {
                report.push("reductive-always", true, "3 samples");
            }
            // the printed invariant-connection coefficients
            if !e.expect_r.is_empty() || e.r_free_dim.is_some() {
                check_printed_r(e, &problem, report);
            }
        }
        Some(ReductiveExpect::Iff(conds)) => {
            for (name, expect) in &e.sample_expects {
                if let SampleExpect::Reductive(want) = expect {
                    let Some(asn) = e.samples.get(name) else {
                        report.fail("reductive-iff", format!("unknown sample `{name}`"));
                        continue;
                    };
                    // consistency of the sample with the stated condition
                    let conds_hold = conds
                        .iter()
                        .all(|c| c.eval(asn).map(|v| v.is_zero()).unwrap_or(false));
                    if conds_hold != *want {
                        report.fail(
                            format!("reductive-sample-{name}"),
                            "sample contradicts the stated iff-condition",
                        );
                        continue;
                    }
                    match reductivity_check(&problem, asn) {
                        Ok(res) => report.push(
                            format!("reductive-sample-{name}"),
                            res.is_some() == *want,
                            format!("expected {}", if *want { "reductive" } else { "non-reductive" }),
                        ),
                        Err(er) => {
                            report.fail(format!("reductive-sample-{name}"), er.to_string())
                        }
                    }
                }
            }
        }
        None => {}
    }

    // per-sample curvature checks
    for (name, expect) in &e.sample_expects {
        let Some(asn) = e.samples.get(name) else {
            if !matches!(expect, SampleExpect::Reductive(_)) {
                report.fail("sample", format!("unknown sample `{name}`"));
            }
            continue;
        };
        match expect {
            SampleExpect::Reductive(_) => {}
            SampleExpect::Einstein(want) => {
                let curv = curvature(&problem);
                let ric = ricci_from_curvature(&curv, &problem.split);
                match einstein_check(&ric, &problem.split.eta, asn) {
                    Ok(got) => report.push(
                        format!("einstein-{name}"),
                        got == *want,
                        format!("got {got:?}, expected {want:?}"),
                    ),
                    Err(er) => report.fail(format!("einstein-{name}"), er.to_string()),
                }
            }
            SampleExpect::ConstantCurvature(want) => {
                let curv = curvature(&problem);
                match constant_curvature_check(&curv, &problem.split, asn) {
                    Ok(got) => report.push(
                        format!("constant-curvature-{name}"),
                        got == *want,
                        format!("got {got:?}, expected {want:?}"),
                    ),
                    Err(er) => {
                        report.fail(format!("constant-curvature-{name}"), er.to_string())
                    }
                }
            }
            SampleExpect::CFamilyDim(want) => match bianchi_solve(&problem, asn) {
                Ok(fam) => {
                    let dim_ok = fam.family.dim() == *want;
                    // and the stored C instantiated at the sample lies inside
                    let mut stored = CTensor::new();
                    let mut inst_ok = true;
                    for (al, j, k, poly) in &e.c_entries {
                        match poly.eval(asn) {
                            Ok(v) => stored.set(*al, *j, *k, Poly::constant(v)),
                            Err(er) => {
                                inst_ok = false;
                                report
                                    .fail(format!("bianchi-family-{name}"), er.to_string());
                            }
                        }
                    }
                    if inst_ok {
                        report.push(
                            format!("bianchi-family-{name}"),
                            dim_ok && fam.contains_tensor(&stored),
                            format!("dim {} (expected {want})", fam.family.dim()),
                        );
                    }
                }
                Err(er) => report.fail(format!("bianchi-family-{name}"), er.to_string()),
            },
            SampleExpect::BianchiInconsistent => {
                let got = bianchi_solve(&problem, asn);
                report.push(
                    format!("bianchi-inconsistent-{name}"),
                    matches!(got, Err(CartanError::Inconsistent)),
                    "pure-coefficient constraints must be violated",
                );
            }
        }
    }

    // restricted Killing form
    if let Some(want) = e.killing_nondegenerate {
        match crate::cartan::killing_nondegenerate_subspace(&problem.split) {
            Ok(got) => {
                report.push("killing-nondegenerate", got == want, format!("computed {got}"));
                if got {
                    // non-degeneracy forces reductivity for every P
                    for asn in deterministic_frees(sol.dim(), 5) {
                        let auto = ExtensionProblem::new(
                            problem.split.clone(),
                            sol.as_poly_matrix(),
                            CTensor::new(),
                        );
                        match reductivity_check(&auto, &asn) {
                            Ok(Some(_)) => {}
                            _ => report.fail(
                                "killing-forces-reductive",
                                "non-degenerate restriction with unsolvable condition",
                            ),
                        }
                    }
                }
            }
            Err(er) => report.fail("killing-nondegenerate", er.to_string()),
        }
    }
    let _ = opts;
}

fn check_printed_r(e: &ExtensionEntry, problem: &ExtensionProblem, report: &mut Report) {
    // instantiate the entry parameters at a few sample points and check the
    // printed solution lies in the computed family (free names t, t1, ...)
    let mut r_params: Vec<String> = Vec::new();
    for (_, _, p) in &e.expect_r {
        for v in p.params() {
            if !e.params.contains(&v) && !r_params.contains(&v) {
                r_params.push(v);
            }
        }
    }
    let samples = if e.samples.is_empty() {
        deterministic_frees(e.params.len(), 2)
            .into_iter()
            .map(|mut a| {
                let mut out = Assignment::new();
                for (k, name) in e.params.iter().enumerate() {
                    let v = a.remove(&format!("p{}", k + 1)).unwrap_or_else(|| int(1));
                    out.insert(name.clone(), v);
                }
                out
            })
            .collect::<Vec<_>>()
    } else {
        e.samples.values().cloned().collect()
    };
    let q = problem.split.q;
    let n = problem.split.n;
    for (k, asn) in samples.iter().enumerate() {
        if problem.check_domain(asn).is_err() {
            continue;
        }
        match reductivity_check(problem, asn) {
            Ok(Some(family)) => {
                if let Some(want) = e.r_free_dim {
                    if family.dim() != want {
                        report.fail(
                            "r-free-dim",
                            format!("family dim {} at sample {k}, expected {want}", family.dim()),
                        );
                        continue;
                    }
                }
                // evaluate printed r at free values 0 and 1
                for tval in [int(0), int(1)] {
                    let mut full = asn.clone();
                    for name in &r_params {
                        full.insert(name.clone(), tval.clone());
                    }
                    let mut vec = vec![crate::scalar::Rational::zero(); q * n];
                    let mut ok = true;
                    for (al, i, p) in &e.expect_r {
                        match p.eval(&full) {
                            Ok(v) => vec[*al * n + *i] = v,
                            Err(er) => {
                                ok = false;
                                report.fail("printed-r", er.to_string());
                            }
                        }
                    }
                    if ok && !family.contains(&vec) {
                        report.fail(
                            "printed-r",
                            format!("printed solution not in the family at sample {k}"),
                        );
                    }
                }
            }
            Ok(None) => report.fail("printed-r", format!("not reductive at sample {k}")),
            Err(er) => report.fail("printed-r", er.to_string()),
        }
    }
    if report.checks.iter().all(|c| c.name != "printed-r" || c.passed) {
        report.push("printed-r", true, "printed coefficients lie in the solved family");
    }
    if e.r_free_dim.is_some()
        && report
            .checks
            .iter()
            .all(|c| c.name != "r-free-dim" || c.passed)
    {
        report.push("r-free-dim", true, "");
    }
}

// --- pairs and maps -----------------------------------------------------------

fn qpair(p: &ConstPair<crate::scalar::Rational>) -> ConstPair<QSqrt2> {
    ConstPair {
        algebra: p.algebra.map_scalars(|c| QSqrt2::from_rational(c.clone())),
        h_span: p
            .h_span
            .iter()
            .map(|v| v.iter().map(|c| QSqrt2::from_rational(c.clone())).collect())
            .collect(),
    }
}

fn algebra_pair_q(
    catalog: &Catalog,
    id: &str,
    params: &Assignment,
) -> Result<ConstPair<QSqrt2>, String> {
    let a = catalog
        .algebra(id)
        .ok_or_else(|| format!("unknown algebra `{id}`"))?;
    let inst = a
        .algebra
        .instantiate(params)
        .map_err(|e| format!("target instantiation: {e}"))?;
    Ok(qpair(&ConstPair {
        algebra: inst,
        h_span: a.h_span.clone(),
    }))
}

fn dual_map_matrix(
    m: &MorphismEntry,
    n: usize,
    q: usize,
    dim: usize,
    asn: &Assignment,
    override_dual: Option<(usize, &SExpr)>,
) -> Result<crate::linalg::Mat<QSqrt2>, String> {
    let mut vars: std::collections::BTreeMap<String, QSqrt2> = asn
        .iter()
        .map(|(k, v)| (k.clone(), QSqrt2::from_rational(v.clone())))
        .collect();
    let mut mat = crate::linalg::Mat::zeros(dim, n + q);
    for (k, expr) in &m.duals {
        let expr = match override_dual {
            Some((kk, e)) if kk == *k => e,
            _ => expr,
        };
        // extract linear coefficients by exact evaluation at unit vectors
        for c in 0..(n + q) {
            let tok = if c < n {
                format!("th{}", c + 1)
            } else {
                format!("w{}", c - n + 1)
            };
            for cc in 0..(n + q) {
                let t = if cc < n {
                    format!("th{}", cc + 1)
                } else {
                    format!("w{}", cc - n + 1)
                };
                vars.insert(t, QSqrt2::zero());
            }
            vars.insert(tok, QSqrt2::one());
            let with = expr.eval(&vars).map_err(|e| e.to_string())?;
            for cc in 0..(n + q) {
                let t = if cc < n {
                    format!("th{}", cc + 1)
                } else {
                    format!("w{}", cc - n + 1)
                };
                vars.insert(t, QSqrt2::zero());
            }
            let base = expr.eval(&vars).map_err(|e| e.to_string())?;
            mat[(*k, c)] = with.sub(&base);
        }
    }
    Ok(mat)
}

fn validate_morphism(catalog: &Catalog, m: &MorphismEntry, report: &mut Report) {
    if m.source_is_algebra {
        // direct map between algebra pairs
        let src_alg = match catalog.algebra(&m.source) {
            Some(a) => a,
            None => {
                report.fail("source", format!("unknown algebra `{}`", m.source));
                return;
            }
        };
        let asn = m.samples.values().next().cloned().unwrap_or_default();
        let inst = match src_alg.algebra.instantiate(&asn) {
            Ok(i) => i,
            Err(e) => {
                report.fail("source", e.to_string());
                return;
            }
        };
        let src = qpair(&ConstPair {
            algebra: inst,
            h_span: if m.source_h.is_empty() {
                src_alg.h_span.clone()
            } else {
                m.source_h.clone()
            },
        });
        let dst = match algebra_pair_q(catalog, &m.target, &asn) {
            Ok(d) => d,
            Err(er) => {
                report.fail("target", er);
                return;
            }
        };
        let dim = src.algebra.dim;
        let mut mat = crate::linalg::Mat::zeros(dim, dim);
        for (c, col) in &m.map_cols {
            for (r, v) in col.iter().enumerate() {
                mat[(r, *c)] = QSqrt2::from_rational(v.clone());
            }
        }
        let rep = verify_pair_isomorphism(&src, &dst, &mat);
        report.push("residual-zero", rep.residual_zero, "");
        report.push("invertible", rep.invertible, "");
        report.push("isotropy-maps", rep.isotropy_maps, "");
        return;
    }
    let Some(e) = catalog.extension(&m.source) else {
        report.fail("source", format!("unknown extension `{}`", m.source));
        return;
    };
    let problem = match build_problem(catalog, e) {
        Ok(p) => p,
        Err(msg) => {
            report.fail("source", msg);
            return;
        }
    };
    let (n, q) = (problem.split.n, problem.split.q);
    for (name, asn) in &m.samples {
        let pair = match assemble_pair(&problem, asn) {
            Ok(p) => p,
            Err(er) => {
                report.fail(format!("assemble-{name}"), er.to_string());
                continue;
            }
        };
        report.push(format!("assemble-{name}"), true, "jacobi holds");
        let src = qpair(&pair);
        // target parameters evaluated at the sample
        let mut tparams = Assignment::new();
        let vars: std::collections::BTreeMap<String, QSqrt2> = asn
            .iter()
            .map(|(k, v)| (k.clone(), QSqrt2::from_rational(v.clone())))
            .collect();
        let mut tp_ok = true;
        for (pname, expr) in &m.target_params {
            match expr.eval(&vars) {
                Ok(v) if v.b.is_zero() => {
                    tparams.insert(pname.clone(), v.a);
                }
                Ok(_) => {
                    tp_ok = false;
                    report.fail(
                        format!("target-param-{name}"),
                        format!("{pname} is irrational at this sample"),
                    );
                }
                Err(er) => {
                    tp_ok = false;
                    report.fail(format!("target-param-{name}"), er.to_string());
                }
            }
        }
        if !tp_ok {
            continue;
        }
        let dst = match algebra_pair_q(catalog, &m.target, &tparams) {
            Ok(d) => d,
            Err(er) => {
                report.fail(format!("target-{name}"), er);
                continue;
            }
        };
        let mat = match dual_map_matrix(m, n, q, dst.algebra.dim, asn, None) {
            Ok(mt) => mt,
            Err(er) => {
                report.fail(format!("map-{name}"), er);
                continue;
            }
        };
        let rep = verify_pair_isomorphism(&src, &dst, &mat);
        report.push(
            format!("isomorphism-{name}"),
            rep.holds(),
            format!(
                "residual={} invertible={} isotropy={}",
                rep.residual_zero, rep.invertible, rep.isotropy_maps
            ),
        );
        // rejected variants must fail
        for (vname, k, expr) in &m.rejected_duals {
            match dual_map_matrix(m, n, q, dst.algebra.dim, asn, Some((*k, expr))) {
                Ok(mt) => {
                    let rep = verify_pair_isomorphism(&src, &dst, &mt);
                    report.push(
                        format!("rejected-{vname}-{name}"),
                        !rep.holds(),
                        "misprinted variant must fail",
                    );
                }
                Err(_) => {
                    // an unparseable or out-of-range variant counts as failing
                    report.push(format!("rejected-{vname}-{name}"), true, "invalid variant");
                }
            }
        }
    }
}

fn validate_embedding(catalog: &Catalog, e: &EmbeddingEntry, report: &mut Report) {
    let Some(src) = catalog.algebra(&e.source) else {
        report.fail("source", format!("unknown algebra `{}`", e.source));
        return;
    };
    let dim = src.algebra.dim;
    let nt = e.eta_diag.len();
    // build the images as QSqrt2 matrices
    let empty = std::collections::BTreeMap::new();
    let mut phi: Vec<crate::linalg::Mat<QSqrt2>> =
        vec![crate::linalg::Mat::zeros(nt, nt); dim];
    for (k, items) in &e.phi {
        for (coef, i, j) in items {
            match coef.eval(&empty) {
                Ok(v) => phi[*k][(*i, *j)] = phi[*k][(*i, *j)].f_add(&v),
                Err(er) => {
                    report.fail("phi", er.to_string());
                    return;
                }
            }
        }
    }
    // skewness with respect to the diagonal form
    let eta = crate::linalg::Mat::from_fn(nt, nt, |i, j| {
        if i == j {
            QSqrt2::from_rational(e.eta_diag[i].clone())
        } else {
            QSqrt2::zero()
        }
    });
    let mut skew = true;
    for x in &phi {
        let s = x.transpose().matmul(&eta).add(&eta.matmul(x));
        if !s.is_zero() {
            skew = false;
        }
    }
    report.push("eta-skew", skew, "all images");
    // bracket condition on matrices
    let inst = match src.algebra.instantiate(&Assignment::new()) {
        Ok(i) => i,
        Err(er) => {
            report.fail("source", er.to_string());
            return;
        }
    };
    let mut ok = true;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let comm = phi[i].matmul(&phi[j]).sub(&phi[j].matmul(&phi[i]));
            let mut rhs: crate::linalg::Mat<QSqrt2> = crate::linalg::Mat::zeros(nt, nt);
            for k in 0..dim {
                let c = inst.c(k, i, j);
                if !c.f_is_zero() {
                    rhs = rhs.add(&phi[k].scale(&QSqrt2::from_rational(c.clone())));
                }
            }
            if !comm.sub(&rhs).is_zero() {
                ok = false;
            }
        }
    }
    report.push("morphism-residual", ok, "matrix commutators match the table");
    // injectivity
    let flat = crate::linalg::Mat::from_fn(dim, nt * nt, |k, idx| {
        phi[k][(idx / nt, idx % nt)].clone()
    });
    report.push(
        "injective",
        flat.rank() == dim,
        format!("rank {} of {dim}", flat.rank()),
    );
}

fn validate_conjugation(catalog: &Catalog, c: &ConjugationEntry, report: &mut Report) {
    let Some(space) = catalog.spaces.get(&c.space) else {
        report.fail("space", format!("unknown space `{}`", c.space));
        return;
    };
    let a = &c.matrix;
    // conjugation preserves the skew algebra iff A^T eta A is proportional
    // to eta
    let m = a.transpose().matmul(&space.eta).matmul(a);
    let mut scale = None;
    let mut proportional = true;
    for i in 0..space.n {
        for j in 0..space.n {
            let eij = &space.eta[(i, j)];
            if eij.is_zero() {
                if !m[(i, j)].is_zero() {
                    proportional = false;
                }
            } else {
                let r = &m[(i, j)] / eij;
                match &scale {
                    None => scale = Some(r),
                    Some(s) if *s != r => proportional = false,
                    _ => {}
                }
            }
        }
    }
    report.push("preserves-eta", proportional, "A^T eta A proportional to eta");
    let Some(ainv) = a.inverse() else {
        report.fail("invertible", "conjugating matrix is singular");
        return;
    };
    report.push("invertible", true, "");
    let resolve = |names: &[String]| -> Result<Vec<Vec<crate::scalar::Rational>>, String> {
        names
            .iter()
            .map(|nm| {
                space.combo(nm, 0).map_err(|e| e.to_string()).map(|mat| {
                    (0..space.n * space.n)
                        .map(|idx| mat[(idx / space.n, idx % space.n)].clone())
                        .collect()
                })
            })
            .collect()
    };
    let (src, dst) = match (resolve(&c.source_span), resolve(&c.target_span)) {
        (Ok(s), Ok(d)) => (s, d),
        (Err(e), _) | (_, Err(e)) => {
            report.fail("span", e);
            return;
        }
    };
    let mut maps = true;
    for v in &src {
        let x = crate::linalg::Mat::from_fn(space.n, space.n, |i, j| v[i * space.n + j].clone());
        let img = ainv.matmul(&x).matmul(a);
        let flat: Vec<crate::scalar::Rational> = (0..space.n * space.n)
            .map(|idx| img[(idx / space.n, idx % space.n)].clone())
            .collect();
        if !in_span(&dst, &flat) {
            maps = false;
        }
    }
    report.push("maps-isotropy", maps, "conjugated span lands in the target span");
}

// --- charts, coframes, pullbacks ----------------------------------------------

fn chart_metric(c: &ChartEntry) -> MetricChart {
    let mut m = MetricChart::new(c.coords.clone());
    for (i, j, e) in &c.g_entries {
        m.set(*i, *j, e.clone());
    }
    m
}

fn validate_chart(c: &ChartEntry, opts: &ValidateOptions, report: &mut Report) {
    let metric = chart_metric(c);
    for (sample_name, expect) in &c.expects {
        let Some(asn) = c.samples.get(sample_name) else {
            report.fail("sample", format!("unknown sample `{sample_name}`"));
            continue;
        };
        let bound = match BoundMetric::new(&metric, asn) {
            Ok(b) => b,
            Err(e) => {
                report.fail(format!("bind-{sample_name}"), e.to_string());
                continue;
            }
        };
        let points = match sample_points(&bound, opts.points, opts.seed, opts.tol.det) {
            Ok(p) => p,
            Err(e) => {
                report.fail(format!("points-{sample_name}"), e.to_string());
                continue;
            }
        };
        let mut worst_ricci = 0.0f64;
        let mut worst_nabla = 0.0f64;
        let mut worst_bianchi = 0.0f64;
        let mut lambdas: Vec<f64> = Vec::new();
        let mut worst_einstein = 0.0f64;
        let mut min_einstein_resid = f64::INFINITY;
        let mut min_cc_resid = f64::INFINITY;
        let mut geo_err = None;
        for p in &points {
            match bound.geometry_at(p, opts.tol.det) {
                Ok(geo) => {
                    worst_ricci = worst_ricci.max(geo.max_abs_ricci());
                    worst_nabla = worst_nabla.max(geo.max_abs_nabla_r());
                    worst_bianchi = worst_bianchi.max(geo.first_bianchi_residual());
                    let (lam, resid) = geo.einstein_fit();
                    lambdas.push(lam);
                    worst_einstein = worst_einstein.max(resid);
                    min_einstein_resid = min_einstein_resid.min(resid);
                    let (_, ccres) = geo.constant_curvature_fit();
                    min_cc_resid = min_cc_resid.min(ccres);
                }
                Err(e) => geo_err = Some(e.to_string()),
            }
        }
        if let Some(e) = geo_err {
            report.fail(format!("geometry-{sample_name}"), e);
            continue;
        }
        report.push(
            format!("first-bianchi-{sample_name}"),
            worst_bianchi <= opts.tol.ricci,
            format!("max |R_(i[jkl])| = {worst_bianchi:.3e}"),
        );
        if expect.ricci_flat {
            report.push(
                format!("ricci-flat-{sample_name}"),
                worst_ricci <= opts.tol.ricci,
                format!("max |Ric| = {worst_ricci:.3e} over {} points", points.len()),
            );
        }
        if expect.nabla_r_zero {
            report.push(
                format!("nabla-r-{sample_name}"),
                worst_nabla <= opts.tol.nabla,
                format!("max |nabla R| = {worst_nabla:.3e}"),
            );
        }
        if let Some(lam_expect) = &expect.einstein {
            let pass_fit = worst_einstein <= opts.tol.einstein;
            let spread = {
                let first = lambdas.first().cloned().unwrap_or(0.0);
                lambdas
                    .iter()
                    .map(|l| (l - first).abs() / first.abs().max(1.0))
                    .fold(0.0f64, f64::max)
            };
            let mut ok = pass_fit && spread <= opts.tol.lambda_spread;
            let mut detail = format!(
                "fit residual {worst_einstein:.3e}, lambda {:.6} spread {spread:.3e}",
                lambdas.first().cloned().unwrap_or(0.0)
            );
            if let Some(expr) = lam_expect {
                let vars: std::collections::BTreeMap<String, QSqrt2> = asn
                    .iter()
                    .map(|(k, v)| (k.clone(), QSqrt2::from_rational(v.clone())))
                    .collect();
                match expr.eval(&vars) {
                    Ok(v) if v.b.is_zero() => {
                        let want = rational_to_f64(&v.a);
                        let got = lambdas.first().cloned().unwrap_or(f64::NAN);
                        if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                            ok = false;
                            detail.push_str(&format!(", expected lambda {want}"));
                        }
                    }
                    _ => {
                        ok = false;
                        detail.push_str(", expected lambda did not evaluate");
                    }
                }
            }
            report.push(format!("einstein-{sample_name}"), ok, detail);
        }
        if let Some(margin) = expect.einstein_fail {
            report.push(
                format!("einstein-fail-{sample_name}"),
                min_einstein_resid >= margin,
                format!("min fit residual {min_einstein_resid:.3e} (must exceed {margin:.1e})"),
            );
        }
        if let Some(margin) = expect.cc_fail {
            report.push(
                format!("cc-fail-{sample_name}"),
                min_cc_resid >= margin,
                format!("min fit residual {min_cc_resid:.3e} (must exceed {margin:.1e})"),
            );
        }
        if expect.stabilizer_dim.is_some() || expect.stabilizer_record {
            let take = points.len().min(5);
            let mut dims = Vec::new();
            for p in points.iter().take(take) {
                match curvature_stabilizer_dim(&bound, p, opts.tol.det, opts.tol.sv_rel) {
                    Ok(rep) => dims.push(rep.dim),
                    Err(e) => {
                        report.fail(format!("stabilizer-{sample_name}"), e.to_string());
                        dims.clear();
                        break;
                    }
                }
            }
            if !dims.is_empty() {
                let consistent = dims.iter().all(|d| *d == dims[0]);
                match expect.stabilizer_dim {
                    Some(want) => report.push(
                        format!("stabilizer-{sample_name}"),
                        consistent && dims[0] == want,
                        format!("dims {dims:?}, expected {want}"),
                    ),
                    None => report.push(
                        format!("stabilizer-{sample_name}"),
                        consistent,
                        format!("recorded dim {}", dims[0]),
                    ),
                }
            }
        }
        if expect.frame_curvature {
            if let Some(frame_rows) = &c.frame {
                let frame = CoframeExpr {
                    n_forms: metric.dim,
                    n_coords: metric.dim,
                    rows: frame_rows.clone(),
                };
                let vars: std::collections::BTreeMap<String, QSqrt2> = asn
                    .iter()
                    .map(|(k, v)| (k.clone(), QSqrt2::from_rational(v.clone())))
                    .collect();
                let mut worst = 0.0f64;
                let mut failed = false;
                for p in points.iter().take(points.len().min(20)) {
                    match frame_curvature(&bound, &frame, asn, p, opts.tol.det) {
                        Ok((low, _ghat)) => {
                            let nn = metric.dim;
                            for a in 0..nn {
                                for b in 0..nn {
                                    for cc in 0..nn {
                                        for d in (cc + 1)..nn {
                                            let got = low[((a * nn + b) * nn + cc) * nn + d];
                                            let want = c
                                                .frame_curv
                                                .iter()
                                                .find(|(x, y, z, w, _)| {
                                                    (*x, *y, *z, *w) == (a, b, cc, d)
                                                })
                                                .map(|(_, _, _, _, coef)| {
                                                    coef.eval(&vars)
                                                        .map(|v| rational_to_f64(&v.a))
                                                        .unwrap_or(f64::NAN)
                                                })
                                                .unwrap_or(0.0);
                                            worst = worst.max((got - want).abs());
                                        }
                                    }
                                }
                            }
                        }
                        Err(e) => {
                            failed = true;
                            report.fail(format!("frame-curvature-{sample_name}"), e.to_string());
                            break;
                        }
                    }
                }
                if !failed {
                    report.push(
                        format!("frame-curvature-{sample_name}"),
                        worst <= opts.tol.ricci,
                        format!("max deviation {worst:.3e}"),
                    );
                }
            } else {
                report.fail(format!("frame-curvature-{sample_name}"), "no frame given");
            }
        }
        // Killing fields
        for (kname, field) in &c.killing {
            let fb: Result<Vec<_>, _> = field.iter().map(|e| e.bind(asn)).collect();
            match fb {
                Ok(fb) => {
                    let mut worst = 0.0f64;
                    for p in &points {
                        match killing_residual(&bound, &fb, p) {
                            Ok(r) => worst = worst.max(r),
                            Err(e) => {
                                report.fail(
                                    format!("killing-{kname}-{sample_name}"),
                                    e.to_string(),
                                );
                                worst = f64::INFINITY;
                                break;
                            }
                        }
                    }
                    if worst.is_finite() {
                        report.push(
                            format!("killing-{kname}-{sample_name}"),
                            worst <= opts.tol.ricci,
                            format!("max residual {worst:.3e}"),
                        );
                    }
                }
                Err(e) => report.fail(format!("killing-{kname}-{sample_name}"), e.to_string()),
            }
        }
        for (kname, field) in &c.rejected_killing {
            let fb: Result<Vec<_>, _> = field.iter().map(|e| e.bind(asn)).collect();
            if let Ok(fb) = fb {
                let worst = points
                    .iter()
                    .filter_map(|p| killing_residual(&bound, &fb, p).ok())
                    .fold(0.0f64, f64::max);
                report.push(
                    format!("rejected-killing-{kname}-{sample_name}"),
                    worst > 1e-3,
                    format!("max residual {worst:.3e} (must be clearly nonzero)"),
                );
            }
        }
    }
}

fn validate_coframe(
    catalog: &Catalog,
    c: &CoframeEntry,
    opts: &ValidateOptions,
    report: &mut Report,
) {
    let Some(alg_entry) = catalog.algebra(&c.algebra) else {
        report.fail("algebra", format!("unknown algebra `{}`", c.algebra));
        return;
    };
    let coframe = CoframeExpr {
        n_forms: c.rows.len(),
        n_coords: c.coords.len(),
        rows: c.rows.clone(),
    };
    for (name, asn) in &c.samples {
        let inst = match alg_entry.algebra.instantiate(asn) {
            Ok(i) => i,
            Err(e) => {
                report.fail(format!("instantiate-{name}"), e.to_string());
                continue;
            }
        };
        let mut sampler = crate::chart::PointSampler::new(opts.seed);
        let points: Vec<Vec<f64>> = (0..opts.points).map(|_| sampler.point(c.coords.len())).collect();
        match coframe_check(&coframe, &inst, &points, asn) {
            Ok(resid) => report.push(
                format!("maurer-cartan-{name}"),
                resid <= c.tol,
                format!("max residual {resid:.3e} over {} points", points.len()),
            ),
            Err(e) => report.fail(format!("maurer-cartan-{name}"), e.to_string()),
        }
    }
}

fn validate_pullback(
    catalog: &Catalog,
    p: &PullbackEntry,
    opts: &ValidateOptions,
    report: &mut Report,
) {
    let Some(chart) = catalog.chart(&p.chart) else {
        report.fail("chart", format!("unknown chart `{}`", p.chart));
        return;
    };
    let metric = chart_metric(chart);
    let nx = p.coords_src.len();
    let ny = metric.dim;
    for (name, asn) in &p.samples {
        // source metric entries from etahat and the coframe
        let mut gx = vec![Expr::zero(); nx * nx];
        for (a, b, v) in &p.etahat {
            for k in 0..nx {
                for l in 0..nx {
                    // eta_ab (sigma^a_k sigma^b_l + sigma^b_k sigma^a_l)
                    let term = Expr::mul(
                        Expr::num(v.clone()),
                        Expr::add(
                            Expr::mul(p.sigma[*a][k].clone(), p.sigma[*b][l].clone()),
                            Expr::mul(p.sigma[*b][k].clone(), p.sigma[*a][l].clone()),
                        ),
                    );
                    let term = if a == b {
                        Expr::mul(Expr::num(rat(1, 2)), Expr::add(term.clone(), Expr::zero()))
                    } else {
                        term
                    };
                    gx[k * nx + l] = Expr::add(gx[k * nx + l].clone(), term);
                }
            }
        }
        let run = |maps: &[Expr], label: &str, report: &mut Report| -> Option<f64> {
            // jacobian d x^k / d y^i, symbolic
            let mut jac = vec![Expr::zero(); nx * ny];
            for k in 0..nx {
                for i in 0..ny {
                    jac[k * ny + i] = maps[k].diff(i);
                }
            }
            let bind = |e: &Expr| e.bind(asn);
            let maps_b: Result<Vec<Expr>, _> = maps.iter().map(bind).collect();
            let jac_b: Result<Vec<Expr>, _> = jac.iter().map(bind).collect();
            let gx_b: Result<Vec<Expr>, _> = gx.iter().map(bind).collect();
            let gy_b: Result<Vec<Expr>, _> = metric.g.iter().map(bind).collect();
            let (maps_b, jac_b, gx_b, gy_b) = match (maps_b, jac_b, gx_b, gy_b) {
                (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
                _ => {
                    report.fail(format!("{label}-{name}"), "binding failed");
                    return None;
                }
            };
            let mut sampler = crate::chart::PointSampler::new(opts.seed);
            let mut worst = 0.0f64;
            for _ in 0..opts.points {
                let y = sampler.point(ny);
                let x: Vec<f64> = match maps_b.iter().map(|e| e.eval(&y)).collect() {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let mut ok = true;
                let mut gxv = vec![0.0; nx * nx];
                for (o, e) in gxv.iter_mut().zip(&gx_b) {
                    match e.eval(&x) {
                        Ok(v) => *o = v,
                        Err(_) => ok = false,
                    }
                }
                if !ok {
                    continue;
                }
                for i in 0..ny {
                    for j in 0..ny {
                        let mut acc = 0.0;
                        for k in 0..nx {
                            for l in 0..nx {
                                let jk = jac_b[k * ny + i].eval(&y).unwrap_or(f64::NAN);
                                let jl = jac_b[l * ny + j].eval(&y).unwrap_or(f64::NAN);
                                acc += gxv[k * nx + l] * jk * jl;
                            }
                        }
                        let want = gy_b[i * ny + j].eval(&y).unwrap_or(f64::NAN);
                        worst = worst.max((acc - want).abs());
                    }
                }
            }
            Some(worst)
        };
        if let Some(worst) = run(&p.map, "pullback", report) {
            report.push(
                format!("pullback-{name}"),
                worst <= opts.tol.coframe,
                format!("max deviation {worst:.3e}"),
            );
        }
        for (vname, xi, expr) in &p.rejected_maps {
            let mut variant = p.map.clone();
            variant[*xi] = expr.clone();
            if let Some(worst) = run(&variant, &format!("rejected-{vname}"), report) {
                report.push(
                    format!("rejected-map-{vname}-{name}"),
                    worst > 1e-3,
                    format!("max deviation {worst:.3e} (must be clearly nonzero)"),
                );
            }
        }
    }
}

/// Validates everything: spaces first, then entries in file order.
pub fn validate_all(catalog: &Catalog, opts: &ValidateOptions) -> Vec<Report> {
    let mut out = validate_spaces(catalog, opts);
    for entry in &catalog.entries {
        out.push(validate(catalog, entry, opts));
    }
    out
}
