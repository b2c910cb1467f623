use intscale::tensor_io::TensorPayload;
use intscale::{
    dequantize, dual_quantize, generate_synthetic, quantize, read_tensor, reconstruction_mse,
    write_tensor, AmplifierChoice, BitWidth, Distribution, GemmEngine, GemmPath, Granularity,
    IntegerScaleSet, QuantizedTensor, Scheme,
};

#[test]
fn files_to_gemm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let x = generate_synthetic(8, 256, Distribution::Gaussian { sigma: 1.0 }, 1).unwrap();
    let w = generate_synthetic(256, 32, Distribution::LlamaLike, 2).unwrap();
    let (x_path, w_path, q_path) = (
        dir.path().join("x.qtns"),
        dir.path().join("w.qtns"),
        dir.path().join("w4.qtns"),
    );
    write_tensor(&TensorPayload::Real(x.clone()), &x_path).unwrap();
    write_tensor(&TensorPayload::Real(w.clone()), &w_path).unwrap();

    let x = read_tensor(&x_path).unwrap().into_real().unwrap();
    let w = read_tensor(&w_path).unwrap().into_real().unwrap();
    let xq = quantize(
        &x,
        BitWidth::Eight,
        Scheme::Symmetric,
        Granularity::PerToken,
    )
    .unwrap();
    let wq = quantize(
        &w,
        BitWidth::Four,
        Scheme::Symmetric,
        Granularity::group(128),
    )
    .unwrap();
    wq.save(&q_path).unwrap();
    let wq = QuantizedTensor::load(&q_path).unwrap();

    let set = IntegerScaleSet::for_weight(&wq, AmplifierChoice::Heuristic).unwrap();
    assert_eq!(set.amplifier().value(), 1024);
    let engine = GemmEngine::default();
    let float = engine.run(&xq, &wq, &GemmPath::FloatScale).unwrap();
    let int = engine.run(&xq, &wq, &GemmPath::IntegerScale(set)).unwrap();
    let mse = reconstruction_mse(&float.output, &int.output).unwrap();
    let signal =
        reconstruction_mse(&float.output, &intscale::FloatTensor::zeros(8, 32).unwrap()).unwrap();
    assert!(mse < signal * 1e-2, "mse {mse} vs signal {signal}");
}

#[test]
fn dual_quant_reconstruction_tracks_weights() {
    let w = generate_synthetic(256, 16, Distribution::Gaussian { sigma: 0.05 }, 3).unwrap();
    let d = dual_quantize(&w, 64).unwrap();
    let eight_bit = reconstruction_mse(&w, &dequantize(&d.outer)).unwrap();
    let four_bit = quantize(
        &w,
        BitWidth::Four,
        Scheme::Symmetric,
        Granularity::PerChannel,
    )
    .unwrap();
    let four_bit = reconstruction_mse(&w, &dequantize(&four_bit)).unwrap();
    assert!(eight_bit < four_bit);
    assert!(d.inner.values().iter().all(|v| (0..=15).contains(v)));
}

#[test]
fn asymmetric_quantized_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.qtns");
    let x = generate_synthetic(64, 8, Distribution::Uniform { lo: -0.5, hi: 2.0 }, 4).unwrap();
    for bits in [BitWidth::Four, BitWidth::Eight] {
        let q = quantize(&x, bits, Scheme::Asymmetric, Granularity::group(16)).unwrap();
        q.save(&path).unwrap();
        assert_eq!(QuantizedTensor::load(&path).unwrap(), q);
    }
}
