use hypowave_bench::{heisenberg_operator, unit_beam};
use hypowave_core::wave::StencilOrder;

#[test]
fn fixtures_build() {
    let op = heisenberg_operator(9, StencilOrder::Fourth).unwrap();
    assert_eq!(op.grid().counts(), vec![8, 9, 9]);
    let beam = unit_beam(40.0).unwrap();
    assert_eq!(beam.k, 40.0);
}
