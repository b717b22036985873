//! The field, drift and functional catalog, with a few point evaluations.
//!
//! cargo run --example field_catalog

use itwlab::field::{list_catalog, FieldSpec};

fn main() -> itwlab::Result<()> {
    for e in list_catalog() {
        let reg = match (e.sobolev_index, e.kind) {
            (_, "functional") => "-".to_string(),
            (Some(s), _) => format!("{s:.3}"),
            (None, _) => "smooth".to_string(),
        };
        println!("{:<32} {:<10} d={} {:<7} {}", e.id, e.kind, e.dims, reg, e.description);
    }
    println!();
    for id in ["sin:omega=1", "peano", "poly:c=0,-1", "bump:sigma=0.5"] {
        let f = FieldSpec::from_id(id, 1)?;
        let vals: Vec<String> = [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .map(|&y| f.eval_deterministic(0.25, &[y]).map(|v| format!("{v:+.4}")))
            .collect::<itwlab::Result<_>>()?;
        println!("{id:<16} f(0.25, y) at y = -1, 0, 0.5, 2: {}", vals.join(" "));
    }
    Ok(())
}
