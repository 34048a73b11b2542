//! Central finite-difference verification of analytic gradients.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Worst relative error observed within one named parameter block.
#[derive(Debug, Clone)]
pub struct FdBlockReport {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub coords_checked: usize,
}

#[derive(Debug, Clone)]
pub struct FdReport {
    pub step: f64,
    pub tolerance: f64,
    pub blocks: Vec<FdBlockReport>,
}

impl FdReport {
    pub fn max_rel_err(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_err)
            .fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_rel_err() <= self.tolerance
    }
}

/// Compares an analytic gradient against central differences of `loss`.
///
/// `theta`/`analytic` are the flattened parameters and gradient; `blocks`
/// names contiguous ranges of that layout. At most `max_coords_per_block`
/// coordinates per block are probed (0 = all), chosen by seeded shuffle so
/// large weight matrices stay affordable. The relative error of coordinate
/// `i` is `|a_i - fd_i| / max(|a_i|, |fd_i|, floor)`; `floor` guards
/// coordinates whose true gradient is (near-)zero.
#[allow(clippy::too_many_arguments)]
pub fn finite_diff_check<F: FnMut(&[f64]) -> f64>(
    mut loss: F,
    theta: &[f64],
    analytic: &[f64],
    blocks: &[(String, Range<usize>)],
    step: f64,
    tolerance: f64,
    floor: f64,
    max_coords_per_block: usize,
    seed: u64,
) -> FdReport {
    assert_eq!(theta.len(), analytic.len(), "param/grad length mismatch");
    let mut work = theta.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(blocks.len());
    for (name, range) in blocks {
        let mut idx: Vec<usize> = range.clone().collect();
        if max_coords_per_block > 0 && idx.len() > max_coords_per_block {
            idx.shuffle(&mut rng);
            idx.truncate(max_coords_per_block);
        }
        let mut worst = 0.0f64;
        let mut worst_index = range.start;
        for &i in &idx {
            let orig = work[i];
            work[i] = orig + step;
            let up = loss(&work);
            work[i] = orig - step;
            let down = loss(&work);
            work[i] = orig;
            let fd = (up - down) / (2.0 * step);
            let a = analytic[i];
            let rel = (a - fd).abs() / (a.abs().max(fd.abs()).max(floor));
            if rel > worst {
                worst = rel;
                worst_index = i;
            }
        }
        reports.push(FdBlockReport {
            name: name.clone(),
            max_rel_err: worst,
            worst_index,
            coords_checked: idx.len(),
        });
    }
    FdReport {
        step,
        tolerance,
        blocks: reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(theta: &[f64]) -> f64 {
        theta.iter().map(|&t| t * t).sum()
    }

    #[test]
    fn quadratic_loss_matches_to_high_precision() {
        let theta = vec![0.3, -1.2, 2.0, 0.05];
        let analytic: Vec<f64> = theta.iter().map(|&t| 2.0 * t).collect();
        let blocks = vec![("theta".to_string(), 0..4)];
        let report = finite_diff_check(
            quadratic, &theta, &analytic, &blocks, 1e-5, 1e-8, 1e-10, 0, 0,
        );
        assert!(
            report.pass(),
            "quadratic FD error {} too large",
            report.max_rel_err()
        );
    }

    #[test]
    fn detects_a_corrupted_gradient() {
        let theta = vec![0.5, 1.5];
        let mut analytic: Vec<f64> = theta.iter().map(|&t| 2.0 * t).collect();
        analytic[1] += 0.25;
        let blocks = vec![("theta".to_string(), 0..2)];
        let report = finite_diff_check(
            quadratic, &theta, &analytic, &blocks, 1e-5, 1e-4, 1e-10, 0, 0,
        );
        assert!(!report.pass());
        assert_eq!(report.blocks[0].worst_index, 1);
    }

    #[test]
    fn step_sweep_brackets_a_minimum() {
        // smooth, curvature-rich scalar: truncation error dominates at large
        // steps, roundoff at tiny ones; 1e-5 sits near the optimum.
        let f = |t: &[f64]| (3.0 * t[0]).sin().exp() + (2.0 * t[0]).cos();
        let theta = vec![0.37];
        let x = theta[0];
        let analytic =
            vec![3.0 * (3.0 * x).cos() * (3.0 * x).sin().exp() - 2.0 * (2.0 * x).sin()];
        let blocks = vec![("t".to_string(), 0..1)];
        let err_at = |h: f64| {
            finite_diff_check(f, &theta, &analytic, &blocks, h, 1.0, 1e-12, 0, 0).max_rel_err()
        };
        let coarse = err_at(1e-3);
        let mid = err_at(1e-5);
        let fine = err_at(1e-9);
        assert!(mid <= coarse, "mid {mid} vs coarse {coarse}");
        assert!(mid <= fine, "mid {mid} vs fine {fine}");
    }
}
