//! Report assembly and rendering. Output is a pure function of the input
//! bivector and order, so identical invocations give identical bytes.

use std::fmt::Write as _;

use serde::Serialize;
use symreal_core::poly::{Naming, Poly};
use symreal_core::realization::{extended_brackets, Diagnostics, Realization};
use symreal_core::tensor::{SymTensor, TensorEntry};
use symreal_core::Bivector;

/// One component of a matrix of brackets, one based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub poly: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderedTensor {
    pub order: usize,
    pub entries: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtendedTable {
    pub x_x: Vec<PairEntry>,
    pub x_xt: Vec<PairEntry>,
    pub xt_xt: Vec<PairEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub dim: usize,
    pub order: usize,
    pub params: Vec<String>,
    pub input: Vec<PairEntry>,
    pub gamma: Vec<OrderedTensor>,
    pub theta_corrections: Vec<OrderedTensor>,
    pub jacobiator: Vec<TensorEntry>,
    pub extended_brackets: ExtendedTable,
    pub diagnostics: Diagnostics,
}

fn pairs(matrix: &[Vec<Poly>], upper_only: bool) -> Vec<PairEntry> {
    let mut out = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if (upper_only && j <= i) || p.is_zero() {
                continue;
            }
            out.push(PairEntry {
                i: i + 1,
                j: j + 1,
                poly: p.render_with(Naming::ORIGINAL),
            });
        }
    }
    out
}

fn ordered(tensors: &[SymTensor], naming: Naming) -> Vec<OrderedTensor> {
    tensors
        .iter()
        .enumerate()
        .map(|(k, t)| OrderedTensor {
            order: k + 1,
            entries: t.to_entries_with(naming),
        })
        .collect()
}

pub fn input_entries(theta: &Bivector) -> Vec<PairEntry> {
    pairs(theta.matrix(), true)
}

pub fn build_report(real: &Realization) -> Report {
    let theta = real.bivector();
    let ext = extended_brackets(real);
    Report {
        dim: theta.dim(),
        order: real.order(),
        params: theta.vars().params().to_vec(),
        input: input_entries(theta),
        gamma: ordered(real.gammas(), Naming::DARBOUX),
        theta_corrections: ordered(real.theta_corrections(), Naming::ORIGINAL),
        jacobiator: real.jacobiator().tensor().to_entries_with(Naming::ORIGINAL),
        extended_brackets: ExtendedTable {
            x_x: pairs(&ext.x_x, true),
            x_xt: pairs(&ext.x_xt, false),
            xt_xt: pairs(&ext.xt_xt, true),
        },
        diagnostics: real.diagnostics().clone(),
    }
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn indices(idx: &[usize]) -> String {
    idx.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn tensor_lines(out: &mut String, entries: &[TensorEntry]) {
    if entries.is_empty() {
        out.push_str("  (zero)\n");
    }
    for e in entries {
        if e.tail.is_empty() {
            let _ = writeln!(out, "  [{}] {}", indices(&e.lead), e.poly);
        } else {
            let _ = writeln!(
                out,
                "  [{} | {}] {}",
                indices(&e.lead),
                indices(&e.tail),
                e.poly
            );
        }
    }
}

fn pair_lines(out: &mut String, name: &str, left: &str, right: &str, entries: &[PairEntry]) {
    let _ = writeln!(out, "{name}");
    if entries.is_empty() {
        out.push_str("  (zero)\n");
    }
    for e in entries {
        let _ = writeln!(out, "  {{{left}{}, {right}{}}} = {}", e.i, e.j, e.poly);
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "zero"
    } else {
        "NONZERO"
    }
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dim {}, order {}", report.dim, report.order);
    if !report.params.is_empty() {
        let _ = writeln!(out, "params {}", report.params.join(" "));
    }
    pair_lines(&mut out, "input", "x", "x", &report.input);
    for g in &report.gamma {
        let _ = writeln!(out, "gamma order {}", g.order);
        tensor_lines(&mut out, &g.entries);
    }
    for t in &report.theta_corrections {
        let _ = writeln!(out, "theta correction order {}", t.order);
        tensor_lines(&mut out, &t.entries);
    }
    out.push_str("jacobiator\n");
    tensor_lines(&mut out, &report.jacobiator);
    let ext = &report.extended_brackets;
    pair_lines(&mut out, "extended brackets {x, x}", "x", "x", &ext.x_x);
    pair_lines(&mut out, "extended brackets {x, xt}", "x", "xt", &ext.x_xt);
    pair_lines(
        &mut out,
        "extended brackets {xt, xt}",
        "xt",
        "xt",
        &ext.xt_xt,
    );
    let d = &report.diagnostics;
    out.push_str("diagnostics\n");
    let _ = writeln!(out, "  poisson input: {}", d.poisson_input);
    let _ = writeln!(
        out,
        "  fundamental identity defect: {}",
        flag(d.fundamental_identity_zero)
    );
    let _ = writeln!(out, "  contract holds: {}", d.contract_holds);
    for o in &d.orders {
        let _ = write!(
            out,
            "  order {}: G terms {}, gamma terms {}, gamma sign {:+}, cyclicity defect {}",
            o.order,
            o.g_terms,
            o.gamma_terms,
            o.gamma_normalization,
            flag(o.cyclicity_defect_zero)
        );
        if let (Some(f), Some(t), Some(s), Some(z)) = (
            o.f_terms,
            o.theta_terms,
            o.theta_normalization,
            o.four_term_defect_zero,
        ) {
            let _ = write!(
                out,
                ", F terms {f}, theta terms {t}, theta sign {s:+}, four-term defect {}",
                flag(z)
            );
        }
        out.push('\n');
    }
    out
}
