use hsiseg::envi::{self, ByteOrder, DataType, Interleave, WriteOptions};
use hsiseg::rng::CounterRng;
use hsiseg::HyperCube;

/// Values exactly representable in `dtype`, spanning its range.
fn cube_for(dtype: DataType, rng: &mut CounterRng) -> HyperCube {
    let (h, w, c) = (3, 5, 4);
    HyperCube::from_fn(h, w, c, |_, _, _| match dtype {
        DataType::U8 => rng.below(256) as f64,
        DataType::U16 => rng.below(65536) as f64,
        DataType::I16 => rng.below(65536) as f64 - 32768.0,
        DataType::I32 => (rng.next_u64() as u32 as i32) as f64,
        DataType::F32 => (rng.uniform(-1e6, 1e6) as f32) as f64,
        DataType::F64 => rng.uniform(-1e12, 1e12),
    })
    .unwrap()
}

#[test]
fn write_read_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = CounterRng::new(41, 0);
    for dtype in DataType::ALL {
        let cube = cube_for(dtype, &mut rng)
            .with_wavelengths(vec![450.0, 550.0, 650.5, 900.25])
            .unwrap();
        for interleave in Interleave::ALL {
            for byte_order in [ByteOrder::Little, ByteOrder::Big] {
                let path = dir
                    .path()
                    .join(format!("{dtype:?}_{interleave}_{byte_order:?}.hdr"));
                let opts = WriteOptions {
                    interleave,
                    data_type: dtype,
                    byte_order,
                };
                envi::write_envi(&path, &cube, opts).unwrap();
                let (header, back) = envi::read_raster(&path).unwrap();
                assert_eq!(header.interleave, interleave);
                assert_eq!(header.data_type, dtype);
                assert_eq!(header.byte_order, byte_order);
                let same_bits = back
                    .data()
                    .iter()
                    .zip(cube.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                assert!(same_bits, "{dtype:?} {interleave} {byte_order:?}");
                assert_eq!(back.wavelengths(), cube.wavelengths());
            }
        }
    }
}

#[test]
fn interleave_conversion_preserves_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = CounterRng::new(42, 0);
    let cube = cube_for(DataType::I16, &mut rng);
    let a = dir.path().join("a.hdr");
    let b = dir.path().join("b.hdr");
    let c = dir.path().join("c.hdr");
    let opts = WriteOptions {
        interleave: Interleave::Bsq,
        data_type: DataType::I16,
        byte_order: ByteOrder::Big,
    };
    envi::write_envi(&a, &cube, opts).unwrap();
    let (_, loaded) = envi::read_raster(&a).unwrap();
    envi::write_envi(
        &b,
        &loaded,
        WriteOptions {
            interleave: Interleave::Bip,
            ..opts
        },
    )
    .unwrap();
    let (_, loaded) = envi::read_raster(&b).unwrap();
    envi::write_envi(&c, &loaded, opts).unwrap();
    assert_eq!(
        std::fs::read(a.with_extension("raw")).unwrap(),
        std::fs::read(c.with_extension("raw")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&c).unwrap()
    );
}
