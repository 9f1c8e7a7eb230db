use conewave::grid::Grid;
use conewave::solver::*;
use conewave::symbol::*;

fn main() {
    let grid = Grid::new(2, 10.0, 64).unwrap();
    let (sym, pair) = catalog_synthetic_lorentz(1.0, 3.0, 2).unwrap();
    let opts = SolverOptions::for_grid(sym.singular_set(), &grid);
    let t0 = std::time::Instant::now();
    let gt = boundary_matrix(&pair, &grid, BoundaryOp::Dirichlet, UnknownForm::LayerConvolution, AssemblyRoute::GridTrace, &opts).unwrap();
    println!("grid layer-form assembled [{:?}]", t0.elapsed());
    let t1 = std::time::Instant::now();
    let eps = grid.dual_spacing() / 10.0;
    let kq = k_kernel_matrix(&pair, &grid, eps).unwrap();
    println!("k_kernel quadrature assembled [{:?}]", t1.elapsed());
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..64 {
        for j in 0..64 {
            num += (gt.matrix[(i, j)] - kq[(i, j)]).norm_sqr();
            den += kq[(i, j)].norm_sqr();
        }
    }
    println!("rel Frobenius disagreement = {:.3e}", (num / den).sqrt());
    for (i, j) in [(32usize, 32usize), (36, 32), (32, 36), (40, 28), (10, 50)] {
        println!("  K[{i},{j}]: grid {:+.5e}{:+.5e}i   quad {:+.5e}{:+.5e}i",
            gt.matrix[(i,j)].re, gt.matrix[(i,j)].im, kq[(i,j)].re, kq[(i,j)].im);
    }
}
