//! Closed-form reports: the optimal scaling factor table and model curves.

use std::io::Write;

use mlatc::complexity::{
    alpha_grid, alpha_star_table, candidate_size, candidate_size_limit, layer_count, objective_h,
    total_cost, CostModelParams, KAPPA_MAX, TABLE_RATIOS,
};

/// Node counts at which the per-N curves are evaluated.
pub const CURVE_NODE_COUNTS: [u64; 7] = [10, 100, 1_000, 10_000, 100_000, 1_000_000, 10_000_000];

/// Writes four CSV blocks separated by blank lines:
///
/// 1. `r,alpha_star`: the optimal scaling factor per cost ratio.
/// 2. `alpha,h_r<r>...,k0`: the objective per ratio and the candidate-size
///    limit over alpha in `[1.1, 10]`.
/// 3. `n,alpha,layers,cost`: layer count and modelled search cost with
///    `c_d = c_s = 1` and the hexagonal packing constant.
/// 4. `level,k_alpha4`: expected candidates per layer at alpha = 4.
pub fn write_report<W: Write>(mut out: W) -> std::io::Result<()> {
    writeln!(out, "r,alpha_star")?;
    for (r, a) in alpha_star_table() {
        writeln!(out, "{r},{a:.3}")?;
    }

    writeln!(out)?;
    write!(out, "alpha")?;
    for r in TABLE_RATIOS {
        write!(out, ",h_r{r}")?;
    }
    writeln!(out, ",k0")?;
    for a in alpha_grid(1.1, 10.0, 0.1).expect("fixed grid") {
        write!(out, "{a:.1}")?;
        for r in TABLE_RATIOS {
            write!(out, ",{:.6}", objective_h(a, r).expect("alpha > 1"))?;
        }
        writeln!(
            out,
            ",{:.6}",
            candidate_size_limit(a, KAPPA_MAX).expect("alpha > 1")
        )?;
    }

    writeln!(out)?;
    writeln!(out, "n,alpha,layers,cost")?;
    let params = CostModelParams::new(KAPPA_MAX, 1.0, 1.0).expect("valid parameters");
    for alpha in [2.0, 3.0, 4.0, 6.0, 8.0] {
        for n in CURVE_NODE_COUNTS {
            let l = layer_count(n, alpha).expect("alpha > 1");
            let c = total_cost(n, alpha, &params).expect("alpha > 1");
            writeln!(out, "{n},{alpha},{l},{c:.6}")?;
        }
    }
    writeln!(out)?;
    writeln!(out, "level,k_alpha4")?;
    for level in 1..=8 {
        writeln!(
            out,
            "{level},{:.6}",
            candidate_size(level, 4.0, KAPPA_MAX).expect("alpha > 1")
        )?;
    }
    Ok(())
}

/// Parses the first block of [`write_report`] output.
pub fn read_alpha_star_table(report: &str) -> Vec<(f64, f64)> {
    report
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .filter_map(|l| {
            let (r, a) = l.split_once(',')?;
            Some((r.parse().ok()?, a.parse().ok()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_blocks() {
        let mut buf = Vec::new();
        write_report(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let table = read_alpha_star_table(&text);
        assert_eq!(table.len(), 5);
        assert_eq!(table[0].0, 0.0);
        assert!((table[0].1 - 2.891).abs() <= 0.005);
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 4);
        assert!(blocks[1].starts_with("alpha,h_r0,h_r0.5,h_r1.5,h_r5,h_r10,k0\n1.1,"));
        assert_eq!(blocks[1].lines().count(), 1 + 90);
        assert!(blocks[2].contains("\n10000,4,5,"));
    }
}
