//! Grid evaluation and CSV/JSON output.

use std::io::Write;

use forward_equilibrium::equilibrium::{self, Equilibrium, NoForwardEquilibrium};
use forward_equilibrium::ModelKind;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::scenario::{Param, Quantity, Scenario};

pub const HEADER: [&str; 12] = [
    "axis1",
    "axis2",
    "alpha",
    "h",
    "F",
    "P0",
    "E_PT",
    "premium",
    "yield",
    "price_change",
    "alpha_nf",
    "error",
];

#[derive(Debug, Clone)]
pub struct Row {
    pub axis1: Option<f64>,
    pub axis2: Option<f64>,
    pub eq: Option<Equilibrium>,
    pub nf: Option<NoForwardEquilibrium>,
    /// Storage base πT of the point, for the forward volume ratio.
    pub pi_t: f64,
    pub error: Option<String>,
}

impl Row {
    /// Forward volume as a fraction of `πT + α̂`.
    pub fn hedge_share(&self) -> Option<f64> {
        self.eq.as_ref().map(|e| e.h / (self.pi_t + e.alpha))
    }

    pub fn get(&self, q: Quantity) -> Option<f64> {
        let e = self.eq.as_ref();
        match q {
            Quantity::Alpha => e.map(|e| e.alpha),
            Quantity::H => self.hedge_share(),
            Quantity::Forward => e.map(|e| e.forward),
            Quantity::P0 => e.map(|e| e.p0),
            Quantity::EPt => e.map(|e| e.e_pt),
            Quantity::Premium => e.map(|e| e.forward_premium),
            Quantity::Yield => e.map(|e| e.convenience_yield),
            Quantity::PriceChange => e.map(|e| e.expected_price_change),
            Quantity::AlphaNf => self.nf.as_ref().map(|n| n.alpha),
        }
    }

    pub fn price_change_nf(&self) -> Option<f64> {
        self.nf.as_ref().map(|n| n.expected_price_change)
    }
}

/// Every grid point in axis order: the first axis varies fastest.
pub fn grid(scenario: &Scenario) -> Vec<Vec<(Param, f64)>> {
    match scenario.sweep.as_slice() {
        [] => vec![vec![]],
        [a] => a
            .points()
            .into_iter()
            .map(|x| vec![(a.parameter, x)])
            .collect(),
        [a, b] => b
            .points()
            .into_iter()
            .flat_map(|y| {
                a.points()
                    .into_iter()
                    .map(move |x| vec![(a.parameter, x), (b.parameter, y)])
            })
            .collect(),
        _ => unreachable!("validated to at most two axes"),
    }
}

pub fn evaluate(scenario: &Scenario, point: &[(Param, f64)]) -> Row {
    let (market, model) = scenario.build(point);
    let mut row = Row {
        axis1: point.first().map(|p| p.1),
        axis2: point.get(1).map(|p| p.1),
        eq: None,
        nf: None,
        pi_t: scenario.market.pi_t,
        error: None,
    };
    let (market, model) = match (market, model) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.pi_t = market.pi_t;
    match equilibrium::solve(&market, &model, ModelKind::of(&model)) {
        Ok(eq) if eq.clearing_residual.abs() <= 1e-9 * (1.0 + eq.forward.abs()) => {
            row.eq = Some(eq)
        }
        Ok(eq) => {
            row.error = Some(format!("clearing residual {:e}", eq.clearing_residual));
            return row;
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    if scenario.include_no_forward {
        match equilibrium::solve_no_forward(&market, &model) {
            Ok(nf) => row.nf = Some(nf),
            Err(e) => row.error = Some(format!("without forward: {e}")),
        }
    }
    row
}

pub fn run(scenario: &Scenario) -> Vec<Row> {
    grid(scenario)
        .par_iter()
        .map(|p| evaluate(scenario, p))
        .collect()
}

fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn record(r: &Row) -> [String; 12] {
    [
        num(r.axis1),
        num(r.axis2),
        num(r.get(Quantity::Alpha)),
        num(r.get(Quantity::H)),
        num(r.get(Quantity::Forward)),
        num(r.get(Quantity::P0)),
        num(r.get(Quantity::EPt)),
        num(r.get(Quantity::Premium)),
        num(r.get(Quantity::Yield)),
        num(r.get(Quantity::PriceChange)),
        num(r.get(Quantity::AlphaNf)),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(rows: &[Row]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "axis1": r.axis1,
                    "axis2": r.axis2,
                    "alpha": r.get(Quantity::Alpha),
                    "h": r.get(Quantity::H),
                    "F": r.get(Quantity::Forward),
                    "P0": r.get(Quantity::P0),
                    "E_PT": r.get(Quantity::EPt),
                    "premium": r.get(Quantity::Premium),
                    "yield": r.get(Quantity::Yield),
                    "price_change": r.get(Quantity::PriceChange),
                    "alpha_nf": r.get(Quantity::AlphaNf),
                    "price_change_nf": r.price_change_nf(),
                    "error": r.error,
                })
            })
            .collect(),
    )
}

/// All fields of a single solve, for the `solve` subcommand.
pub fn detail(eq: &Equilibrium, nf: Option<&NoForwardEquilibrium>) -> Vec<(&'static str, f64)> {
    let mut v = vec![
        ("alpha", eq.alpha),
        ("h", eq.h),
        ("F", eq.forward),
        ("P0", eq.p0),
        ("E_PT", eq.e_pt),
        ("premium", eq.forward_premium),
        ("yield", eq.convenience_yield),
        ("price_change", eq.expected_price_change),
        ("clearing_residual", eq.clearing_residual),
        ("producer_utility", eq.producer_utility),
        ("investor_utility", eq.investor_utility),
    ];
    if let Some(n) = nf {
        v.extend([
            ("alpha_nf", n.alpha),
            ("P0_nf", n.p0),
            ("E_PT_nf", n.e_pt),
            ("price_change_nf", n.expected_price_change),
        ]);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(sweep: &str) -> Scenario {
        Scenario::parse(&format!(
            r#"{{
            "market": {{"mu": 20, "m": 1, "pi0": 5, "pi_t": 3, "eps": 0.05,
                       "rate": 0.01, "gamma_p": 0.25, "gamma_s": 0.2}},
            "model": {{"kind": "brownian", "sigma1": 0.2, "sigma2": 2, "rho": 0.5,
                      "mpr": 0.3, "horizon": 1}},
            "include_no_forward": true,
            "sweep": [{sweep}]
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn empty_sweep_is_one_row() {
        let rows = run(&scenario(""));
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_none());
        assert!(rows[0].axis1.is_none());
    }

    #[test]
    fn first_axis_varies_fastest() {
        let s = scenario(
            r#"{"parameter": "rho", "values": [-0.5, 0.5]},
               {"parameter": "gamma_p", "values": [0.2, 0.3, 0.4]}"#,
        );
        let rows = run(&s);
        let axes: Vec<_> = rows
            .iter()
            .map(|r| (r.axis1.unwrap(), r.axis2.unwrap()))
            .collect();
        assert_eq!(
            axes,
            [
                (-0.5, 0.2),
                (0.5, 0.2),
                (-0.5, 0.3),
                (0.5, 0.3),
                (-0.5, 0.4),
                (0.5, 0.4)
            ]
        );
    }

    #[test]
    fn failed_points_keep_their_row() {
        let s = scenario(r#"{"parameter": "rho", "values": [0.5, 1.0]}"#);
        let rows = run(&s);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some() && rows[1].eq.is_none());
    }

    #[test]
    fn csv_round_trips_floats() {
        let rows = run(&scenario(r#"{"parameter": "rho", "values": [0.1]}"#));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        let f: f64 = fields[4].parse().unwrap();
        assert_eq!(f.to_bits(), rows[0].eq.as_ref().unwrap().forward.to_bits());
        assert!(!text.contains('\r'));
    }
}
