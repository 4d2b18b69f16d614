//! Round-trip invariant: any text the parser accepts must survive
//! format -> parse in both layouts with identical shape and entries.
//! (Writers are real-only, so complex-free inputs are what the corpus
//! exercises; parsed tensors always satisfy that.)

#![no_main]

use libfuzzer_sys::fuzz_target;
use ttensor::io::{format_tensor_dense, format_tensor_sparse, parse_tensor};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(tensor) = parse_tensor(text) else {
        return;
    };
    let dense = format_tensor_dense(&tensor).expect("parsed tensors are writable");
    let back = parse_tensor(&dense).expect("dense writer output must parse");
    assert_eq!(back, tensor, "dense round trip changed the tensor");

    let sparse = format_tensor_sparse(&tensor).expect("parsed tensors are writable");
    let back = parse_tensor(&sparse).expect("sparse writer output must parse");
    assert_eq!(back, tensor, "sparse round trip changed the tensor");
});
