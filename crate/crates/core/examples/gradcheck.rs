//! Backpropagation against central finite differences for every layer kind.

use latentwalk::cli::{gradcheck_suite, gradcheck_table};

fn main() -> latentwalk::Result<()> {
    let summary = gradcheck_suite(1e-6)?;
    print!("{}", gradcheck_table(&summary));
    summary.check()
}
