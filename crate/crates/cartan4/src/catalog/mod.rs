//! Machine-readable encodings of every classified case — algebra tables,
//! orthogonal splits with their complement coefficients and two-form data,
//! changes of basis, chart metrics, coframes — together with the validator
//! that replays the construction pipeline on each entry and diffs the
//! outcome against the stored expectations.

pub mod parse;
pub mod validate;

pub use validate::{validate, CheckResult, Report, Tolerances, ValidateOptions};

use crate::chart::expr::{parse_expr, Expr};
use crate::linalg::Mat;
use crate::scalar::{Assignment, Poly, Rational};
use parse::{
    err1, parse_assignment, parse_matrix_rows, parse_poly_expr, parse_sexpr, ParseError, SExpr,
};
use std::collections::BTreeMap;

/// A named matrix algebra: the invariant form and explicit generators.
#[derive(Clone, Debug)]
pub struct Space {
    pub name: String,
    pub n: usize,
    pub eta: Mat<Rational>,
    pub gens: Vec<(String, Mat<Rational>)>,
}

impl Space {
    pub fn gen(&self, name: &str) -> Option<&Mat<Rational>> {
        self.gens.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Resolves a rational combination like "3/5 B1 + 4/5 B2" or "A1 - A3".
    pub fn combo(&self, text: &str, line: usize) -> Result<Mat<Rational>, ParseError> {
        let e = parse_sexpr(text).map_err(|e| ParseError::At {
            line,
            msg: e.to_string(),
        })?;
        self.combo_expr(&e, line)
    }

    fn combo_expr(&self, e: &SExpr, line: usize) -> Result<Mat<Rational>, ParseError> {
        Ok(match e {
            SExpr::Var(name) => self
                .gen(name)
                .ok_or(ParseError::At {
                    line,
                    msg: format!("unknown generator `{name}`"),
                })?
                .clone(),
            SExpr::Add(a, b) => self.combo_expr(a, line)?.add(&self.combo_expr(b, line)?),
            SExpr::Sub(a, b) => self.combo_expr(a, line)?.sub(&self.combo_expr(b, line)?),
            SExpr::Neg(a) => self.combo_expr(a, line)?.scale(&crate::scalar::int(-1)),
            SExpr::Mul(a, b) => {
                // one side must evaluate to a rational constant
                let (c, m) = match (const_rational(a), const_rational(b)) {
                    (Some(c), _) => (c, b.as_ref()),
                    (_, Some(c)) => (c, a.as_ref()),
                    _ => return err1(line, "generator combos must have rational scalars"),
                };
                self.combo_expr(m, line)?.scale(&c)
            }
            SExpr::Div(a, b) => match const_rational(b) {
                Some(d) => self
                    .combo_expr(a, line)?
                    .scale(&(crate::scalar::int(1) / d)),
                None => return err1(line, "generator combos must have rational scalars"),
            },
            _ => return err1(line, "unsupported generator combination"),
        })
    }
}

fn const_rational(e: &SExpr) -> Option<Rational> {
    let v = e.eval(&BTreeMap::new()).ok()?;
    if v.b == num_traits::Zero::zero() {
        Some(v.a)
    } else {
        None
    }
}

/// A classified table with its isotropy span and expectations.
#[derive(Clone, Debug)]
pub struct AlgebraEntry {
    pub algebra: crate::liealg::LieAlgebra,
    pub h_span: Vec<Vec<Rational>>,
    /// rejected variants: (name, i, j, new target k, new poly); the variant
    /// is the base table with every (i,j) bracket replaced by this one
    pub rejected: Vec<(String, usize, usize, usize, Poly)>,
    /// (rank, assignment) expectations
    pub killing_rank: Vec<(usize, Assignment)>,
    /// a generic assignment for subalgebra checks
    pub generic: Assignment,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductiveExpect {
    Always,
    /// reductive exactly when all listed polynomials vanish
    Iff(Vec<Poly>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleExpect {
    Reductive(bool),
    Einstein(Option<Rational>),
    ConstantCurvature(Option<Rational>),
    CFamilyDim(usize),
    BianchiInconsistent,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum RicciExpect {
    #[default]
    Unspecified,
    Zero,
    Entries(Vec<(usize, usize, Poly)>),
}

#[derive(Clone, Debug)]
pub struct ExtensionEntry {
    pub space: String,
    pub label: String,
    pub iso: Vec<String>,
    pub comp: Vec<String>,
    pub params: Vec<String>,
    pub domain: Vec<Poly>,
    pub p_entries: Vec<(usize, usize, Poly)>,
    /// display-only alternative used for the exact-naming comparison when
    /// the computational coefficients are branch-substituted
    pub p_display: Vec<(usize, usize, Poly)>,
    pub c_entries: Vec<(usize, usize, usize, Poly)>,
    pub a3_exact: bool,
    pub a3_dim: Option<usize>,
    pub reductive: Option<ReductiveExpect>,
    pub expect_r: Vec<(usize, usize, Poly)>,
    pub r_free_dim: Option<usize>,
    pub samples: BTreeMap<String, Assignment>,
    pub sample_expects: Vec<(String, SampleExpect)>,
    /// lowered curvature table rows: (i, j, terms (coef, a, b))
    pub curvature: Vec<(usize, usize, Vec<(Poly, usize, usize)>)>,
    pub has_curvature: bool,
    pub ricci: RicciExpect,
    pub killing_nondegenerate: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct MorphismEntry {
    /// either an extension id (assembled pair) or an algebra id
    pub source: String,
    pub source_is_algebra: bool,
    pub source_h: Vec<Vec<Rational>>,
    pub target: String,
    pub target_params: Vec<(String, SExpr)>,
    /// dual rows for extension sources: target dual index -> expression in
    /// th1..thn, w1..wq and the source parameters
    pub duals: Vec<(usize, SExpr)>,
    /// direct columns for algebra sources: Phi(e_c) coordinates
    pub map_cols: Vec<(usize, Vec<Rational>)>,
    pub rejected_duals: Vec<(String, usize, SExpr)>,
    pub samples: BTreeMap<String, Assignment>,
}

#[derive(Clone, Debug)]
pub struct EmbeddingEntry {
    pub source: String,
    pub eta_diag: Vec<Rational>,
    /// phi(e_k) as matrix items (coef, row, col), 0-based
    pub phi: Vec<(usize, Vec<(SExpr, usize, usize)>)>,
}

#[derive(Clone, Debug)]
pub struct ConjugationEntry {
    pub space: String,
    pub matrix: Mat<Rational>,
    pub source_span: Vec<String>,
    pub target_span: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ChartExpect {
    pub ricci_flat: bool,
    pub nabla_r_zero: bool,
    pub einstein: Option<Option<SExpr>>,
    pub einstein_fail: Option<f64>,
    pub cc_fail: Option<f64>,
    pub stabilizer_dim: Option<usize>,
    pub stabilizer_record: bool,
    pub frame_curvature: bool,
}

#[derive(Clone, Debug)]
pub struct ChartEntry {
    pub coords: Vec<String>,
    pub g_entries: Vec<(usize, usize, Expr)>,
    pub killing: Vec<(String, Vec<Expr>)>,
    pub rejected_killing: Vec<(String, Vec<Expr>)>,
    pub frame: Option<Vec<Vec<Expr>>>,
    /// expected lowered frame-curvature items (a, b, c, d, coef) on
    /// sigma^c ^ sigma^d with c < d; everything unlisted must vanish
    pub frame_curv: Vec<(usize, usize, usize, usize, SExpr)>,
    pub samples: BTreeMap<String, Assignment>,
    pub expects: Vec<(String, ChartExpect)>,
}

#[derive(Clone, Debug)]
pub struct CoframeEntry {
    pub coords: Vec<String>,
    pub algebra: String,
    pub rows: Vec<Vec<Expr>>,
    pub samples: BTreeMap<String, Assignment>,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct PullbackEntry {
    pub chart: String,
    pub coords_src: Vec<String>,
    pub sigma: Vec<Vec<Expr>>,
    pub etahat: Vec<(usize, usize, Rational)>,
    pub map: Vec<Expr>,
    pub rejected_maps: Vec<(String, usize, Expr)>,
    pub samples: BTreeMap<String, Assignment>,
}

#[derive(Clone, Debug)]
pub enum EntryKind {
    Algebra(AlgebraEntry),
    Extension(ExtensionEntry),
    Morphism(MorphismEntry),
    Embedding(EmbeddingEntry),
    Conjugation(ConjugationEntry),
    Chart(ChartEntry),
    Coframe(CoframeEntry),
    Pullback(PullbackEntry),
}

impl EntryKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EntryKind::Algebra(_) => "algebra-pair",
            EntryKind::Extension(_) => "extension-problem",
            EntryKind::Morphism(_) => "morphism",
            EntryKind::Embedding(_) => "morphism",
            EntryKind::Conjugation(_) => "morphism",
            EntryKind::Chart(_) => "chart-metric",
            EntryKind::Coframe(_) => "coframe",
            EntryKind::Pullback(_) => "coframe",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub kind: EntryKind,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    pub spaces: BTreeMap<String, Space>,
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    /// Looks an entry up by id, or by the `space/LABEL` alias of an
    /// extension entry (e.g. `o31/F7` for the split labeled F7).
    pub fn entry(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id).or_else(|| {
            self.entries.iter().find(|e| match &e.kind {
                EntryKind::Extension(x) => {
                    let label = x.label.split_whitespace().next().unwrap_or("");
                    !label.is_empty() && format!("{}/{}", x.space, label) == id
                }
                _ => false,
            })
        })
    }

    pub fn algebra(&self, id: &str) -> Option<&AlgebraEntry> {
        match self.entry(id)?.kind {
            EntryKind::Algebra(ref a) => Some(a),
            _ => None,
        }
    }

    pub fn extension(&self, id: &str) -> Option<&ExtensionEntry> {
        match self.entry(id)?.kind {
            EntryKind::Extension(ref e) => Some(e),
            _ => None,
        }
    }

    pub fn chart(&self, id: &str) -> Option<&ChartEntry> {
        match self.entry(id)?.kind {
            EntryKind::Chart(ref c) => Some(c),
            _ => None,
        }
    }
}

/// The catalog shipped with the crate.
pub const BUILTIN_CATALOG: &str = include_str!("../../data/catalog.txt");

pub fn load_builtin() -> Result<Catalog, ParseError> {
    load_str(BUILTIN_CATALOG)
}

pub fn load_path(path: &std::path::Path) -> Result<Catalog, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::At {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    load_str(&text)
}

/// Parses the block format. Every block starts with `<kind> <id>` and ends
/// with `end`.
pub fn load_str(text: &str) -> Result<Catalog, ParseError> {
    let mut cat = Catalog::default();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((ln, raw)) = lines.next() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (kind, id) = line
            .split_once(char::is_whitespace)
            .ok_or(ParseError::At {
                line: ln + 1,
                msg: format!("expected `<kind> <id>`, got `{line}`"),
            })?;
        let id = id.trim().to_string();
        // collect block body
        let mut body: Vec<(usize, String)> = Vec::new();
        let mut closed = false;
        for (ln2, raw2) in lines.by_ref() {
            let l2 = strip_comment(raw2);
            if l2 == "end" {
                closed = true;
                break;
            }
            if !l2.is_empty() {
                body.push((ln2 + 1, l2.to_string()));
            }
        }
        if !closed {
            return err1(ln + 1, format!("block `{id}` is not closed with `end`"));
        }
        match kind {
            "space" => {
                let s = parse_space(&id, &body)?;
                cat.spaces.insert(id.clone(), s);
            }
            "algebra" => {
                let (a, notes) = parse_algebra_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Algebra(a),
                    notes,
                });
            }
            "extension" => {
                let (e, notes) = parse_extension_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Extension(e),
                    notes,
                });
            }
            "morphism" => {
                let (m, notes) = parse_morphism_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Morphism(m),
                    notes,
                });
            }
            "embedding" => {
                let (m, notes) = parse_embedding_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Embedding(m),
                    notes,
                });
            }
            "conjugation" => {
                let (m, notes) = parse_conjugation_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Conjugation(m),
                    notes,
                });
            }
            "chart" => {
                let (c, notes) = parse_chart_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Chart(c),
                    notes,
                });
            }
            "coframe" => {
                let (c, notes) = parse_coframe_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Coframe(c),
                    notes,
                });
            }
            "pullback" => {
                let (c, notes) = parse_pullback_block(&body)?;
                cat.entries.push(CatalogEntry {
                    id,
                    kind: EntryKind::Pullback(c),
                    notes,
                });
            }
            other => return err1(ln + 1, format!("unknown block kind `{other}`")),
        }
    }
    Ok(cat)
}

fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(i) => raw[..i].trim(),
        None => raw.trim(),
    }
}

fn split_head<'a>(line: &'a str, ln: usize) -> Result<(&'a str, &'a str), ParseError> {
    match line.split_once(char::is_whitespace) {
        Some((h, rest)) => Ok((h, rest.trim())),
        None => Ok((line, "")),
    }
    .and_then(|(h, r)| {
        if h.is_empty() {
            err1(ln, "empty line")
        } else {
            Ok((h, r))
        }
    })
}

fn poly_of(s: &str, ln: usize) -> Result<Poly, ParseError> {
    parse_poly_expr(s).map_err(|e| ParseError::At {
        line: ln,
        msg: e.to_string(),
    })
}

fn sexpr_of(s: &str, ln: usize) -> Result<SExpr, ParseError> {
    parse_sexpr(s).map_err(|e| ParseError::At {
        line: ln,
        msg: e.to_string(),
    })
}

fn idxs(s: &str, count: usize, ln: usize) -> Result<Vec<usize>, ParseError> {
    let v: Result<Vec<usize>, _> = s.split_whitespace().map(|t| t.parse::<usize>()).collect();
    let v = v.map_err(|_| ParseError::At {
        line: ln,
        msg: format!("bad indices `{s}`"),
    })?;
    if v.len() != count || v.iter().any(|&x| x == 0) {
        return err1(ln, format!("expected {count} positive indices in `{s}`"));
    }
    Ok(v.into_iter().map(|x| x - 1).collect())
}

fn parse_space(name: &str, body: &[(usize, String)]) -> Result<Space, ParseError> {
    let mut n = 0usize;
    let mut eta = None;
    let mut gens = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "n" => {
                n = rest.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad n `{rest}`"),
                })?
            }
            "eta" => {
                let rows = parse_matrix_rows(rest, *ln)?;
                eta = Some(Mat::from_rows(rows));
            }
            "gen" => {
                let (gname, items) = rest.split_once('=').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `gen NAME = items`".into(),
                })?;
                let mut m: Mat<Rational> = Mat::zeros(n, n);
                // items: coef(i,j) separated by whitespace; coef optional sign/rational
                for item in items.split_whitespace() {
                    let open = item.find('(').ok_or(ParseError::At {
                        line: *ln,
                        msg: format!("expected coef(i,j), got `{item}`"),
                    })?;
                    let coef_text = &item[..open];
                    let coef = match coef_text {
                        "" | "+" => crate::scalar::int(1),
                        "-" => crate::scalar::int(-1),
                        t => crate::scalar::parse_rational(t).map_err(|e| ParseError::At {
                            line: *ln,
                            msg: e.to_string(),
                        })?,
                    };
                    let inner = item[open + 1..]
                        .strip_suffix(')')
                        .ok_or(ParseError::At {
                            line: *ln,
                            msg: format!("unclosed index in `{item}`"),
                        })?;
                    let (i, j) = inner.split_once(',').ok_or(ParseError::At {
                        line: *ln,
                        msg: format!("expected (i,j) in `{item}`"),
                    })?;
                    let i: usize = i.trim().parse().map_err(|_| ParseError::At {
                        line: *ln,
                        msg: format!("bad row in `{item}`"),
                    })?;
                    let j: usize = j.trim().parse().map_err(|_| ParseError::At {
                        line: *ln,
                        msg: format!("bad col in `{item}`"),
                    })?;
                    m[(i - 1, j - 1)] = m[(i - 1, j - 1)].clone() + coef;
                }
                gens.push((gname.trim().to_string(), m));
            }
            other => return err1(*ln, format!("unknown space line `{other}`")),
        }
    }
    Ok(Space {
        name: name.to_string(),
        n,
        eta: eta.ok_or(ParseError::At {
            line: 0,
            msg: format!("space {name} has no eta"),
        })?,
        gens,
    })
}

fn parse_algebra_block(
    body: &[(usize, String)],
) -> Result<(AlgebraEntry, Vec<String>), ParseError> {
    let mut dim = 0usize;
    let mut alg: Option<crate::liealg::LieAlgebra> = None;
    let mut h_span = Vec::new();
    let mut rejected = Vec::new();
    let mut killing_rank = Vec::new();
    let mut generic = Assignment::new();
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "dim" => {
                dim = rest.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad dim `{rest}`"),
                })?;
                alg = Some(crate::liealg::LieAlgebra::new(dim));
            }
            "params" => {
                let a = alg.as_mut().ok_or(ParseError::At {
                    line: *ln,
                    msg: "params before dim".into(),
                })?;
                a.params = rest.split_whitespace().map(str::to_string).collect();
            }
            "bracket" => {
                let a = alg.as_mut().ok_or(ParseError::At {
                    line: *ln,
                    msg: "bracket before dim".into(),
                })?;
                let (headpart, poly) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let (ij, k) = headpart.split_once("->").ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `->`".into(),
                })?;
                let ij = idxs(ij, 2, *ln)?;
                let k = idxs(k, 1, *ln)?;
                if ij[0] >= dim || ij[1] >= dim || k[0] >= dim {
                    return err1(*ln, "bracket index out of range");
                }
                a.add_bracket_term(ij[0], ij[1], k[0], poly_of(poly, *ln)?);
            }
            "rejected-bracket" => {
                // rejected-bracket NAME: i j -> k: poly
                let (name, body) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `rejected-bracket NAME: i j -> k: poly`".into(),
                })?;
                let (headpart, poly) = body.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing second `:`".into(),
                })?;
                let (ij, k) = headpart.split_once("->").ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `->`".into(),
                })?;
                let ij = idxs(ij, 2, *ln)?;
                let k = idxs(k, 1, *ln)?;
                rejected.push((
                    name.trim().to_string(),
                    ij[0],
                    ij[1],
                    k[0],
                    poly_of(poly, *ln)?,
                ));
            }
            "h" => {
                for row in parse_matrix_rows(rest, *ln)? {
                    if row.len() != dim {
                        return err1(*ln, "isotropy vector length mismatch");
                    }
                    h_span.push(row);
                }
            }
            "killing-rank" => {
                // killing-rank 2 [at p=v,...]
                let (r, asn) = match rest.split_once(" at ") {
                    Some((r, a)) => (r.trim(), parse_assignment(a, *ln)?),
                    None => (rest, Assignment::new()),
                };
                let r: usize = r.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad rank `{r}`"),
                })?;
                killing_rank.push((r, asn));
            }
            "generic" => generic = parse_assignment(rest, *ln)?,
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown algebra line `{other}`")),
        }
    }
    Ok((
        AlgebraEntry {
            algebra: alg.ok_or(ParseError::At {
                line: 0,
                msg: "algebra block without dim".into(),
            })?,
            h_span,
            rejected,
            killing_rank,
            generic,
        },
        notes,
    ))
}

fn parse_extension_block(
    body: &[(usize, String)],
) -> Result<(ExtensionEntry, Vec<String>), ParseError> {
    let mut e = ExtensionEntry {
        space: String::new(),
        label: String::new(),
        iso: Vec::new(),
        comp: Vec::new(),
        params: Vec::new(),
        domain: Vec::new(),
        p_entries: Vec::new(),
        p_display: Vec::new(),
        c_entries: Vec::new(),
        a3_exact: false,
        a3_dim: None,
        reductive: None,
        expect_r: Vec::new(),
        r_free_dim: None,
        samples: BTreeMap::new(),
        sample_expects: Vec::new(),
        curvature: Vec::new(),
        has_curvature: false,
        ricci: RicciExpect::Unspecified,
        killing_nondegenerate: None,
    };
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "space" => e.space = rest.to_string(),
            "label" => e.label = rest.to_string(),
            "iso" => e.iso = rest.split(',').map(|s| s.trim().to_string()).collect(),
            "comp" => e.comp = rest.split(',').map(|s| s.trim().to_string()).collect(),
            "params" => e.params = rest.split_whitespace().map(str::to_string).collect(),
            "domain" => e.domain.push(poly_of(rest, *ln)?),
            "P" | "Pdisplay" => {
                let (idx, poly) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 2, *ln)?;
                let entry = (v[0], v[1], poly_of(poly, *ln)?);
                if head == "P" {
                    e.p_entries.push(entry);
                } else {
                    e.p_display.push(entry);
                }
            }
            "C" => {
                let (idx, poly) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 3, *ln)?;
                e.c_entries.push((v[0], v[1], v[2], poly_of(poly, *ln)?));
            }
            "a3" => match rest {
                "exact" => e.a3_exact = true,
                "span" => e.a3_exact = false,
                other => return err1(*ln, format!("a3 expects exact|span, got `{other}`")),
            },
            "a3-dim" => {
                e.a3_dim = Some(rest.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad a3-dim `{rest}`"),
                })?)
            }
            "reductive" => {
                if rest == "always" {
                    e.reductive = Some(ReductiveExpect::Always);
                } else if let Some(conds) = rest.strip_prefix("iff") {
                    let polys: Result<Vec<Poly>, _> =
                        conds.split(',').map(|c| poly_of(c.trim(), *ln)).collect();
                    e.reductive = Some(ReductiveExpect::Iff(polys?));
                } else {
                    return err1(*ln, format!("bad reductive line `{rest}`"));
                }
            }
            "expect-r" => {
                let (idx, poly) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 2, *ln)?;
                e.expect_r.push((v[0], v[1], poly_of(poly, *ln)?));
            }
            "r-free-dim" => {
                e.r_free_dim = Some(rest.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad r-free-dim `{rest}`"),
                })?)
            }
            "sample" => {
                let (name, asn) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `sample NAME: p=v,...`".into(),
                })?;
                e.samples
                    .insert(name.trim().to_string(), parse_assignment(asn, *ln)?);
            }
            "expect" => {
                // expect NAME reductive yes|no / einstein <r>|none / cc <r>|none
                //        / cdim <int> / bianchi-inconsistent
                let mut parts = rest.splitn(3, char::is_whitespace);
                let name = parts.next().unwrap_or("").to_string();
                let what = parts.next().unwrap_or("");
                let val = parts.next().unwrap_or("").trim();
                let exp = match what {
                    "reductive" => SampleExpect::Reductive(val == "yes"),
                    "einstein" => SampleExpect::Einstein(if val == "none" {
                        None
                    } else {
                        Some(crate::scalar::parse_rational(val).map_err(|er| ParseError::At {
                            line: *ln,
                            msg: er.to_string(),
                        })?)
                    }),
                    "cc" => SampleExpect::ConstantCurvature(if val == "none" {
                        None
                    } else {
                        Some(crate::scalar::parse_rational(val).map_err(|er| ParseError::At {
                            line: *ln,
                            msg: er.to_string(),
                        })?)
                    }),
                    "cdim" => SampleExpect::CFamilyDim(val.parse().map_err(|_| {
                        ParseError::At {
                            line: *ln,
                            msg: format!("bad cdim `{val}`"),
                        }
                    })?),
                    "bianchi-inconsistent" => SampleExpect::BianchiInconsistent,
                    other => return err1(*ln, format!("unknown expect `{other}`")),
                };
                e.sample_expects.push((name, exp));
            }
            "curvature" => {
                e.has_curvature = true;
                let (idx, items) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 2, *ln)?;
                let mut terms = Vec::new();
                let items = items.trim();
                if items != "0" {
                    for item in items.split(';') {
                        // (coef) th a b
                        let item = item.trim();
                        let (coef, wedge) = item.rsplit_once("th").ok_or(ParseError::At {
                            line: *ln,
                            msg: format!("expected `(coef) th a b`, got `{item}`"),
                        })?;
                        let ab = idxs(wedge, 2, *ln)?;
                        terms.push((poly_of(coef, *ln)?, ab[0], ab[1]));
                    }
                }
                e.curvature.push((v[0], v[1], terms));
            }
            "ricci" => {
                if rest == "zero" {
                    e.ricci = RicciExpect::Zero;
                } else {
                    let (idx, poly) = rest.split_once(':').ok_or(ParseError::At {
                        line: *ln,
                        msg: "missing `:`".into(),
                    })?;
                    let v = idxs(idx, 2, *ln)?;
                    let entry = (v[0], v[1], poly_of(poly, *ln)?);
                    match &mut e.ricci {
                        RicciExpect::Entries(list) => list.push(entry),
                        _ => e.ricci = RicciExpect::Entries(vec![entry]),
                    }
                }
            }
            "killing-nondegenerate" => {
                e.killing_nondegenerate = Some(rest == "true");
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown extension line `{other}`")),
        }
    }
    Ok((e, notes))
}

fn parse_morphism_block(
    body: &[(usize, String)],
) -> Result<(MorphismEntry, Vec<String>), ParseError> {
    let mut m = MorphismEntry {
        source: String::new(),
        source_is_algebra: false,
        source_h: Vec::new(),
        target: String::new(),
        target_params: Vec::new(),
        duals: Vec::new(),
        map_cols: Vec::new(),
        rejected_duals: Vec::new(),
        samples: BTreeMap::new(),
    };
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "source" => m.source = rest.to_string(),
            "source-algebra" => {
                m.source = rest.to_string();
                m.source_is_algebra = true;
            }
            "source-h" => {
                m.source_h = parse_matrix_rows(rest, *ln)?;
            }
            "target" => m.target = rest.to_string(),
            "target-param" => {
                let (name, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `target-param NAME: expr`".into(),
                })?;
                m.target_params
                    .push((name.trim().to_string(), sexpr_of(expr, *ln)?));
            }
            "dual" => {
                let (k, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let k = idxs(k, 1, *ln)?;
                m.duals.push((k[0], sexpr_of(expr, *ln)?));
            }
            "rejected-dual" => {
                // rejected-dual NAME k: expr
                let (namek, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let mut it = namek.split_whitespace();
                let name = it.next().unwrap_or("").to_string();
                let k: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or(ParseError::At {
                        line: *ln,
                        msg: "expected `rejected-dual NAME k: expr`".into(),
                    })?;
                m.rejected_duals.push((name, k - 1, sexpr_of(expr, *ln)?));
            }
            "mapcol" => {
                let (c, row) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let c = idxs(c, 1, *ln)?;
                let vals = parse_matrix_rows(row, *ln)?;
                m.map_cols.push((c[0], vals.into_iter().next().unwrap_or_default()));
            }
            "sample" => {
                let (name, asn) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `sample NAME: ...`".into(),
                })?;
                m.samples
                    .insert(name.trim().to_string(), parse_assignment(asn, *ln)?);
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown morphism line `{other}`")),
        }
    }
    Ok((m, notes))
}

fn parse_embedding_block(
    body: &[(usize, String)],
) -> Result<(EmbeddingEntry, Vec<String>), ParseError> {
    let mut e = EmbeddingEntry {
        source: String::new(),
        eta_diag: Vec::new(),
        phi: Vec::new(),
    };
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "source-algebra" => e.source = rest.to_string(),
            "target-eta" => {
                e.eta_diag = parse_matrix_rows(rest, *ln)?
                    .into_iter()
                    .next()
                    .unwrap_or_default()
            }
            "phi" => {
                let (k, items) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let k = idxs(k, 1, *ln)?;
                let mut terms = Vec::new();
                for item in items.split(';') {
                    let item = item.trim();
                    let open = item.rfind('(').ok_or(ParseError::At {
                        line: *ln,
                        msg: format!("expected coef(i,j), got `{item}`"),
                    })?;
                    let coef_text = item[..open].trim();
                    let coef = match coef_text {
                        "" => SExpr::Num(crate::scalar::int(1)),
                        t => sexpr_of(t, *ln)?,
                    };
                    let inner = item[open + 1..].strip_suffix(')').ok_or(ParseError::At {
                        line: *ln,
                        msg: format!("unclosed `{item}`"),
                    })?;
                    let (i, j) = inner.split_once(',').ok_or(ParseError::At {
                        line: *ln,
                        msg: format!("expected (i,j) in `{item}`"),
                    })?;
                    let i: usize = i.trim().parse().map_err(|_| ParseError::At {
                        line: *ln,
                        msg: "bad row".into(),
                    })?;
                    let j: usize = j.trim().parse().map_err(|_| ParseError::At {
                        line: *ln,
                        msg: "bad col".into(),
                    })?;
                    terms.push((coef, i - 1, j - 1));
                }
                e.phi.push((k[0], terms));
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown embedding line `{other}`")),
        }
    }
    Ok((e, notes))
}

fn parse_conjugation_block(
    body: &[(usize, String)],
) -> Result<(ConjugationEntry, Vec<String>), ParseError> {
    let mut matrix = None;
    let mut space = String::new();
    let mut source_span = Vec::new();
    let mut target_span = Vec::new();
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "space" => space = rest.to_string(),
            "matrix" => matrix = Some(Mat::from_rows(parse_matrix_rows(rest, *ln)?)),
            "source-span" => {
                source_span = rest.split(',').map(|s| s.trim().to_string()).collect()
            }
            "target-span" => {
                target_span = rest.split(',').map(|s| s.trim().to_string()).collect()
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown conjugation line `{other}`")),
        }
    }
    Ok((
        ConjugationEntry {
            space,
            matrix: matrix.ok_or(ParseError::At {
                line: 0,
                msg: "conjugation without matrix".into(),
            })?,
            source_span,
            target_span,
        },
        notes,
    ))
}

fn parse_expr_list(rest: &str, coords: &[String], ln: usize) -> Result<Vec<Expr>, ParseError> {
    rest.split('|')
        .map(|part| {
            parse_expr(part.trim(), coords).map_err(|e| ParseError::At {
                line: ln,
                msg: e.to_string(),
            })
        })
        .collect()
}

fn parse_chart_block(body: &[(usize, String)]) -> Result<(ChartEntry, Vec<String>), ParseError> {
    let mut coords: Vec<String> = Vec::new();
    let mut c = ChartEntry {
        coords: Vec::new(),
        g_entries: Vec::new(),
        killing: Vec::new(),
        rejected_killing: Vec::new(),
        frame: None,
        frame_curv: Vec::new(),
        samples: BTreeMap::new(),
        expects: Vec::new(),
    };
    let mut frame_rows: Vec<(usize, Vec<Expr>)> = Vec::new();
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "coords" => {
                coords = rest.split_whitespace().map(str::to_string).collect();
                c.coords = coords.clone();
            }
            "g" => {
                let (idx, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 2, *ln)?;
                let e = parse_expr(expr.trim(), &coords).map_err(|er| ParseError::At {
                    line: *ln,
                    msg: er.to_string(),
                })?;
                c.g_entries.push((v[0], v[1], e));
            }
            "killing" | "rejected-killing" => {
                let (name, exprs) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let comps = parse_expr_list(exprs, &coords, *ln)?;
                if head == "killing" {
                    c.killing.push((name.trim().to_string(), comps));
                } else {
                    c.rejected_killing.push((name.trim().to_string(), comps));
                }
            }
            "frame" => {
                let (k, exprs) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let k = idxs(k, 1, *ln)?;
                frame_rows.push((k[0], parse_expr_list(exprs, &coords, *ln)?));
            }
            "frame-curvature" => {
                let (idx, coef) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let v = idxs(idx, 4, *ln)?;
                c.frame_curv
                    .push((v[0], v[1], v[2], v[3], sexpr_of(coef, *ln)?));
            }
            "sample" => {
                let (name, asn) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `sample NAME: ...`".into(),
                })?;
                c.samples
                    .insert(name.trim().to_string(), parse_assignment(asn, *ln)?);
            }
            "expect" => {
                // expect NAME <flag>[ value]
                let mut parts = rest.splitn(3, char::is_whitespace);
                let name = parts.next().unwrap_or("").to_string();
                let what = parts.next().unwrap_or("");
                let val = parts.next().unwrap_or("").trim().to_string();
                let slot = match c.expects.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, s)) => s,
                    None => {
                        c.expects.push((name.clone(), ChartExpect::default()));
                        &mut c.expects.last_mut().unwrap().1
                    }
                };
                match what {
                    "ricci-flat" => slot.ricci_flat = true,
                    "nabla-r-zero" => slot.nabla_r_zero = true,
                    "einstein" => {
                        slot.einstein = Some(if val.is_empty() {
                            None
                        } else {
                            Some(sexpr_of(&val, *ln)?)
                        })
                    }
                    "einstein-fail" => {
                        slot.einstein_fail =
                            Some(val.parse().map_err(|_| ParseError::At {
                                line: *ln,
                                msg: format!("bad threshold `{val}`"),
                            })?)
                    }
                    "cc-fail" => {
                        slot.cc_fail = Some(val.parse().map_err(|_| ParseError::At {
                            line: *ln,
                            msg: format!("bad threshold `{val}`"),
                        })?)
                    }
                    "stabilizer-dim" => {
                        slot.stabilizer_dim =
                            Some(val.parse().map_err(|_| ParseError::At {
                                line: *ln,
                                msg: format!("bad dim `{val}`"),
                            })?)
                    }
                    "stabilizer-record" => slot.stabilizer_record = true,
                    "frame-curvature" => slot.frame_curvature = true,
                    other => return err1(*ln, format!("unknown chart expect `{other}`")),
                }
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown chart line `{other}`")),
        }
    }
    if !frame_rows.is_empty() {
        frame_rows.sort_by_key(|(k, _)| *k);
        c.frame = Some(frame_rows.into_iter().map(|(_, r)| r).collect());
    }
    Ok((c, notes))
}

fn parse_coframe_block(
    body: &[(usize, String)],
) -> Result<(CoframeEntry, Vec<String>), ParseError> {
    let mut coords: Vec<String> = Vec::new();
    let mut algebra = String::new();
    let mut rows: Vec<(usize, Vec<Expr>)> = Vec::new();
    let mut samples = BTreeMap::new();
    let mut tol = 1e-10;
    let mut notes = Vec::new();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "coords" => coords = rest.split_whitespace().map(str::to_string).collect(),
            "algebra" => algebra = rest.to_string(),
            "sigma" => {
                let (k, exprs) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let k = idxs(k, 1, *ln)?;
                rows.push((k[0], parse_expr_list(exprs, &coords, *ln)?));
            }
            "sample" => {
                let (name, asn) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `sample NAME: ...`".into(),
                })?;
                samples.insert(name.trim().to_string(), parse_assignment(asn, *ln)?);
            }
            "tol" => {
                tol = rest.parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: format!("bad tol `{rest}`"),
                })?
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown coframe line `{other}`")),
        }
    }
    rows.sort_by_key(|(k, _)| *k);
    Ok((
        CoframeEntry {
            coords,
            algebra,
            rows: rows.into_iter().map(|(_, r)| r).collect(),
            samples,
            tol,
        },
        notes,
    ))
}

fn parse_pullback_block(
    body: &[(usize, String)],
) -> Result<(PullbackEntry, Vec<String>), ParseError> {
    let mut chart = String::new();
    let mut coords_src: Vec<String> = Vec::new();
    let mut sigma: Vec<(usize, Vec<Expr>)> = Vec::new();
    let mut etahat = Vec::new();
    let mut map: Vec<(usize, Expr)> = Vec::new();
    let mut rejected = Vec::new();
    let mut samples = BTreeMap::new();
    let mut notes = Vec::new();
    // chart coords are only known at validation; use placeholders y1..y4
    let chart_coords: Vec<String> = (1..=4).map(|i| format!("y{i}")).collect();
    for (ln, line) in body {
        let (head, rest) = split_head(line, *ln)?;
        match head {
            "chart" => chart = rest.to_string(),
            "coords" => coords_src = rest.split_whitespace().map(str::to_string).collect(),
            "sigma" => {
                let (k, exprs) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let k = idxs(k, 1, *ln)?;
                sigma.push((k[0], parse_expr_list(exprs, &coords_src, *ln)?));
            }
            "etahat" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 {
                    return err1(*ln, "expected `etahat i j v`");
                }
                let i: usize = parts[0].parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: "bad index".into(),
                })?;
                let j: usize = parts[1].parse().map_err(|_| ParseError::At {
                    line: *ln,
                    msg: "bad index".into(),
                })?;
                let v = crate::scalar::parse_rational(parts[2]).map_err(|e| ParseError::At {
                    line: *ln,
                    msg: e.to_string(),
                })?;
                etahat.push((i - 1, j - 1, v));
            }
            "map" => {
                let (xi, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let xi = idxs(xi, 1, *ln)?;
                let e = parse_expr(expr.trim(), &chart_coords).map_err(|er| ParseError::At {
                    line: *ln,
                    msg: er.to_string(),
                })?;
                map.push((xi[0], e));
            }
            "rejected-map" => {
                // rejected-map NAME xi: expr
                let (namexi, expr) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "missing `:`".into(),
                })?;
                let mut it = namexi.split_whitespace();
                let name = it.next().unwrap_or("").to_string();
                let xi: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or(ParseError::At {
                        line: *ln,
                        msg: "expected `rejected-map NAME xi: expr`".into(),
                    })?;
                let e = parse_expr(expr.trim(), &chart_coords).map_err(|er| ParseError::At {
                    line: *ln,
                    msg: er.to_string(),
                })?;
                rejected.push((name, xi - 1, e));
            }
            "sample" => {
                let (name, asn) = rest.split_once(':').ok_or(ParseError::At {
                    line: *ln,
                    msg: "expected `sample NAME: ...`".into(),
                })?;
                samples.insert(name.trim().to_string(), parse_assignment(asn, *ln)?);
            }
            "note" => notes.push(rest.to_string()),
            other => return err1(*ln, format!("unknown pullback line `{other}`")),
        }
    }
    sigma.sort_by_key(|(k, _)| *k);
    map.sort_by_key(|(k, _)| *k);
    Ok((
        PullbackEntry {
            chart,
            coords_src,
            sigma: sigma.into_iter().map(|(_, r)| r).collect(),
            etahat,
            map: map.into_iter().map(|(_, e)| e).collect(),
            rejected_maps: rejected,
            samples,
        },
        notes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_loads() {
        let cat = load_builtin().expect("builtin catalog must parse");
        assert!(cat.entries.len() >= 30, "got {} entries", cat.entries.len());
        assert_eq!(cat.spaces.len(), 3);
    }

    #[test]
    fn empty_file_is_empty_catalog() {
        let cat = load_str("").unwrap();
        assert!(cat.entries.is_empty());
        assert!(cat.spaces.is_empty());
    }

    #[test]
    fn malformed_bracket_reports_location() {
        let text = "algebra bad\n  dim 3\n  bracket 1 9 -> 1: 1\nend\n";
        match load_str(text) {
            Err(parse::ParseError::At { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected location error, got {other:?}"),
        }
        let text = "algebra bad\n  dim 3\n  bracket 1 2 1: 1\nend\n";
        assert!(load_str(text).is_err());
    }

    #[test]
    fn unclosed_block_is_rejected() {
        assert!(load_str("algebra x\n  dim 2\n").is_err());
    }
}
