//! The default magnetosphere grid: a uniform 0.4 R_E core within 10 R_E of
//! the Earth, geometrically stretched outward.

use ppmlr::grid::build_default_grid;

fn main() {
    let grid = build_default_grid();
    let [nx, ny, nz] = grid.dims();
    println!("cells {nx} x {ny} x {nz} = {}", grid.cell_count());
    for (name, a) in ["x", "y", "z"].iter().zip(0..3) {
        let axis = grid.axis(a);
        let widest = axis.spacings.iter().cloned().fold(0.0, f64::max);
        println!(
            "{name}: [{:>7.1}, {:>6.1}]  uniform {:>3}  lower {:>2} cells ratio {:.4}  upper {:>2} cells ratio {:.4}  widest {:.2}",
            axis.min(),
            axis.max(),
            axis.uniform_cells,
            axis.lower.cells,
            axis.lower.ratio,
            axis.upper.cells,
            axis.upper.ratio,
            widest
        );
    }
    let x = &grid.x;
    let near = x.locate(0.0).expect("origin is on the grid");
    println!("cell holding x = 0: {near}, spacing {:.2}", x.spacings[near]);
    println!("smallest spacing {:.2}", grid.min_spacing());
}
