//! How the Euclidean average of random unit vectors shrinks with the number
//! of points, next to its Monte Carlo expectation.

use latentwalk::cli::{collapse_study, collapse_table};

fn main() -> latentwalk::Result<()> {
    let rows = collapse_study(&[1, 2, 4, 16, 64, 256], 500, 128, 7)?;
    print!("{}", collapse_table(&rows));
    Ok(())
}
