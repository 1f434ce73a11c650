use s4tower::em::{appendix_tables, em_table};
use s4tower::PrimeField;

fn main() {
    for (id, target, p, max) in appendix_tables() {
        let t = em_table(id, target, PrimeField::new(p).unwrap(), max).unwrap();
        println!("== {id}\n{}", t.to_tsv());
    }
}
