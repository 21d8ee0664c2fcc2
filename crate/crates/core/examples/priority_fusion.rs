//! Fusing two concurrent sub-task distributions with priorities.

use kinsyn::trajectory::{fuse_priorities, PrioritizedGaussian};
use nalgebra::{DMatrix, DVector};

fn g(mean: [f64; 2], var: [f64; 2], priority: f64) -> PrioritizedGaussian {
    PrioritizedGaussian {
        mean: DVector::from_row_slice(&mean),
        cov: DMatrix::from_diagonal(&DVector::from_row_slice(&var)),
        priority,
    }
}

fn main() -> kinsyn::Result<()> {
    // hold and press agree on the target, so equal priorities keep it
    let (m, c) = fuse_priorities(&[g([0.14, 0.48], [1e-4, 4e-4], 0.5), g([0.14, 0.48], [4e-4, 1e-4], 0.5)])?;
    println!("shared target: mean {:?}, var {:?}", m.as_slice(), c.diagonal().as_slice());
    for p in [0.1, 0.5, 0.9] {
        let (m, _) = fuse_priorities(&[g([0.0, 0.3], [1e-3, 1e-3], p), g([0.2, 0.5], [1e-3, 1e-3], 1.0 - p)])?;
        println!("priority {p:.1} on the first task: mean ({:.4}, {:.4})", m[0], m[1]);
    }
    Ok(())
}
