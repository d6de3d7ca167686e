//! Reproduction of the epsilon-family counterexample as a list of checked claims.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::Signed;
use serde::Serialize;

use crate::coupling::{self, GapSign, Property, Verdict};
use crate::error::Result;
use crate::model::{self, OffspringModel};
use crate::rational::{pow, ratio, Rational};
use crate::tree::{self, PlaneTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub eps: String,
    pub claims: Vec<Claim>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.claims {
            let _ = writeln!(out, "[{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.id, c.statement);
        }
        let passed = self.claims.iter().filter(|c| c.pass).count();
        let _ = writeln!(out, "{passed}/{} claims hold", self.claims.len());
        out
    }
}

fn t(code: &[usize]) -> PlaneTree {
    PlaneTree::from_code(code.to_vec()).expect("static tree codes are valid")
}

fn codes(trees: &[PlaneTree]) -> String {
    trees.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

struct Claims(Vec<Claim>);

impl Claims {
    fn push(&mut self, id: &str, statement: String, pass: bool) {
        self.0.push(Claim { id: id.to_string(), statement, pass });
    }

    fn equal(&mut self, id: &str, label: &str, got: &Rational, want: &Rational) {
        let statement = if got == want {
            format!("{label} = {got}")
        } else {
            format!("{label} = {got}, expected {want}")
        };
        self.push(id, statement, got == want);
    }
}

/// Evaluates every claim at `eps = 1/10`, plus threshold and small-`eps` checks.
pub fn reproduce() -> Result<Report> {
    let eps = ratio(1, 10);
    let model = OffspringModel::epsilon(eps.clone())?;
    let mut claims = Claims(Vec::new());

    let three = tree::enumerate(3, Some(2));
    claims.push(
        "three_vertices",
        format!("trees with 3 vertices: {}", codes(&three)),
        three == [t(&[1, 1, 0]), t(&[2, 0, 0])],
    );
    let four = tree::enumerate(4, Some(2));
    claims.push(
        "four_vertices",
        format!("trees with 4 vertices: {}", codes(&four)),
        four.iter().cloned().collect::<BTreeSet<_>>()
            == BTreeSet::from([t(&[1, 1, 1, 0]), t(&[1, 2, 0, 0]), t(&[2, 1, 0, 0]), t(&[2, 0, 1, 0])]),
    );

    let d3 = model::conditioned_dist(&model, 3)?;
    let d4 = model::conditioned_dist(&model, 4)?;
    claims.equal("p3_t1", "P(T_3=t_1)", &d3.prob(&t(&[1, 1, 0])), &ratio(4, 85));
    claims.equal("p3_t2", "P(T_3=t_2)", &d3.prob(&t(&[2, 0, 0])), &ratio(81, 85));
    claims.equal("p4_t3", "P(T_4=t_3)", &d4.prob(&t(&[1, 1, 1, 0])), &ratio(4, 247));
    for (id, label, code) in [
        ("p4_t4", "P(T_4=t_4)", &[1, 2, 0, 0]),
        ("p4_t5", "P(T_4=t_5)", &[2, 1, 0, 0]),
        ("p4_t6", "P(T_4=t_6)", &[2, 0, 1, 0]),
    ] {
        claims.equal(id, label, &d4.prob(&t(code)), &ratio(81, 247));
    }
    claims.equal("ew1_t3", "E W_1(T_3)", &d3.expected_width(1), &ratio(166, 85));
    claims.equal("ew1_t4", "E W_1(T_4)", &d4.expected_width(1), &ratio(409, 247));

    // leading-order behaviour at a much smaller eps
    let small = ratio(1, 1000);
    let small_model = OffspringModel::epsilon(small.clone())?;
    let s3 = model::conditioned_dist(&small_model, 3)?;
    let s4 = model::conditioned_dist(&small_model, 4)?;
    let e2 = pow(&small, 2);
    let e3 = pow(&small, 3);
    let dev = (s3.prob(&t(&[1, 1, 0])) - ratio(4, 1) * &e2).abs();
    claims.push(
        "expansion_p3",
        format!("at ε=1/1000: |P(T_3=t_1) - 4ε²| = {dev} <= 10ε³"),
        dev <= ratio(10, 1) * &e3,
    );
    let dev = (s4.prob(&t(&[1, 2, 0, 0])) - ratio(1, 3)).abs();
    claims.push("expansion_p4", format!("at ε=1/1000: |P(T_4=t_4) - 1/3| = {dev} <= ε²"), dev <= e2);
    let dev = (s3.expected_width(1) - ratio(2, 1)).abs();
    claims.push(
        "expansion_ew3",
        format!("at ε=1/1000: |E W_1(T_3) - 2| = {dev} <= 5ε²"),
        dev <= ratio(5, 1) * &e2,
    );
    let dev = (s4.expected_width(1) - ratio(5, 3)).abs();
    claims.push("expansion_ew4", format!("at ε=1/1000: |E W_1(T_4) - 5/3| = {dev} <= ε²"), dev <= e2);

    let pa = coupling::check_pa(&model, 3, 1)?;
    claims.push(
        "pa_fails",
        format!("Pa at n=3, k=1: {} (gap {})", if pa.holds { "holds" } else { "fails" }, pa.gap),
        !pa.holds,
    );
    let pb = coupling::check_pb(&model, 3, 1)?;
    claims.push(
        "pb_fails",
        format!(
            "Pb at n=3, k=1: {} (E W_1(T_3) = {} vs 1 + σ² = {})",
            if pb.holds { "holds" } else { "fails" },
            pb.lhs,
            pb.rhs
        ),
        !pb.holds,
    );

    let p1 = coupling::check_p1(&model, 3)?;
    let witness_ok = p1.verdict == Verdict::Infeasible
        && p1.witness.as_ref().is_some_and(|w| {
            w.trees == BTreeSet::from([t(&[2, 0, 0])]) && w.mu_mass == ratio(81, 85) && w.nu_mass == ratio(162, 247)
        });
    let statement = match &p1.witness {
        Some(w) => format!(
            "P1 ε=1/10 n=3: {}, witness {} with μ(A) = {} > ν(Γ(A)) = {}",
            p1.verdict,
            codes(&w.trees.iter().cloned().collect::<Vec<_>>()),
            w.mu_mass,
            w.nu_mass
        ),
        None => format!("P1 ε=1/10 n=3: {}", p1.verdict),
    };
    claims.push("p1_infeasible", statement, witness_ok);

    let pa_edge = coupling::gap_at(Property::Pa, &ratio(1, 3), 3, 1)?;
    claims.push(
        "pa_threshold",
        format!("Pa gap at ε=1/3 is exactly {}", pa_edge.gap),
        pa_edge.sign == GapSign::Boundary,
    );
    let below = coupling::gap_at(Property::Pa, &ratio(3, 10), 3, 1)?;
    let above = coupling::gap_at(Property::Pa, &ratio(2, 5), 3, 1)?;
    claims.push(
        "pa_threshold_sides",
        format!("Pa gap at ε=3/10 is {}, at ε=2/5 is {}", below.gap, above.gap),
        below.sign == GapSign::Fails && above.sign == GapSign::Holds,
    );
    let pb_edge = coupling::gap_at(Property::Pb, &ratio(1, 5), 3, 1)?;
    claims.push(
        "pb_threshold",
        format!("Pb gap at ε=1/5 is exactly {}", pb_edge.gap),
        pb_edge.sign == GapSign::Boundary,
    );
    let below = coupling::gap_at(Property::Pb, &ratio(1, 6), 3, 1)?;
    let above = coupling::gap_at(Property::Pb, &ratio(1, 4), 3, 1)?;
    claims.push(
        "pb_threshold_sides",
        format!("Pb gap at ε=1/6 is {}, at ε=1/4 is {}", below.gap, above.gap),
        below.sign == GapSign::Fails && above.sign == GapSign::Holds,
    );

    let binary = OffspringModel::binomial(2)?;
    for n in 1..=7 {
        let r = coupling::check_p1(&binary, n)?;
        claims.push(
            &format!("p1_binary_{n}"),
            format!("P1 Bi(2,1/2) n={n}: {}", r.verdict),
            r.verdict == Verdict::Feasible,
        );
    }

    Ok(Report { eps: eps.to_string(), claims: claims.0 })
}
