//! Generated sources against checked-in copies. Run with `TLOOPS_BLESS=1` to
//! regenerate after an intended change.

mod common;

#[test]
fn generated_sources_match_goldens() {
    let bad = common::golden_mismatches();
    assert!(bad.is_empty(), "stale goldens (rerun with TLOOPS_BLESS=1 to accept): {bad:?}");
}

#[test]
fn contraction_anchors() {
    let kernel = common::golden("contract4.cu");
    assert!(kernel.contains("const int a = threadIdx.y;"));
    assert!(kernel.contains("const int blocksize_x = 64;"));
    let sym = common::golden("sym_contract4.cu");
    assert!(sym.contains("for(int a=b; a<4; ++a){"));
    let fixed = common::golden("fixed_offset4.cu");
    assert!(fixed.contains("TDm01[(i+1)+4*0][x]*TDm02[0+4*0][x]"), "{fixed}");
}
