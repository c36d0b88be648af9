use csgm_core::dataset::{parse_table, standardize_fit_apply, train_test_split, Encoder};
use csgm_core::resample::smote_balance;
use csgm_core::{EncodedDataset, Encoding, Schema, SmoteConfig, SplitSpec};
use ndarray::{s, Array2};
use proptest::prelude::*;

fn dataset(rows: Vec<(Vec<f64>, u8)>) -> EncodedDataset {
    let d = rows[0].0.len();
    let n = rows.len();
    let flat: Vec<f64> = rows.iter().flat_map(|(x, _)| x.clone()).collect();
    let labels = rows.iter().map(|(_, y)| *y).collect();
    EncodedDataset::new(
        Array2::from_shape_vec((n, d), flat).unwrap(),
        labels,
        (0..d).map(|j| format!("x{j}")).collect(),
    )
    .unwrap()
}

fn labeled_rows() -> impl Strategy<Value = EncodedDataset> {
    (1usize..4, 3usize..40)
        .prop_flat_map(|(d, n)| prop::collection::vec((prop::collection::vec(-10.0f64..10.0, d), 0u8..=1), n))
        .prop_filter("needs both classes", |rows| {
            rows.iter().any(|r| r.1 == 0) && rows.iter().any(|r| r.1 == 1)
        })
        .prop_map(dataset)
}

proptest! {
    #[test]
    fn smote_balances_and_keeps_originals(data in labeled_rows(), seed in any::<u64>()) {
        let out = smote_balance(&data, &SmoteConfig::new(seed)).unwrap();
        let [z, o] = data.class_counts();
        let majority = z.max(o);
        prop_assert_eq!(out.class_counts(), [majority, majority]);
        prop_assert_eq!(out.n_samples(), 2 * majority);
        let n = data.n_samples();
        prop_assert_eq!(out.features().slice(s![..n, ..]), data.features().view());
        prop_assert_eq!(&out.labels()[..n], data.labels());
        // Every synthetic coordinate lies within the minority class's bounding box.
        let minority = if z < o { 0 } else { 1 };
        for i in n..out.n_samples() {
            prop_assert_eq!(out.labels()[i], minority);
            for j in 0..data.n_features() {
                let col = (0..n).filter(|&r| data.labels()[r] == minority).map(|r| data.features()[[r, j]]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                let v = out.features()[[i, j]];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
        let again = smote_balance(&data, &SmoteConfig::new(seed)).unwrap();
        prop_assert_eq!(again, out);
    }

    #[test]
    fn split_partitions_rows(n in 3usize..200, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let rows = (0..n).map(|i| (vec![i as f64], (i % 2) as u8)).collect();
        let data = dataset(rows);
        let spec = SplitSpec::new(fraction, seed).unwrap();
        match train_test_split(&data, spec) {
            Ok((train, test)) => {
                prop_assert_eq!(train.n_samples(), spec.train_size(n));
                prop_assert_eq!(train.n_samples() + test.n_samples(), n);
                let mut ids: Vec<u64> = train.features().iter().chain(test.features().iter()).map(|&v| v as u64).collect();
                ids.sort_unstable();
                prop_assert_eq!(ids, (0..n as u64).collect::<Vec<_>>());
                for part in [&train, &test] {
                    for (x, &y) in part.features().column(0).iter().zip(part.labels()) {
                        prop_assert_eq!((*x as usize % 2) as u8, y);
                    }
                }
            }
            Err(csgm_core::Error::EmptyPartition { .. }) => {
                let t = spec.train_size(n);
                prop_assert!(t == 0 || t == n);
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn standardized_train_columns_are_unit(data in labeled_rows()) {
        let (train, test) = standardize_fit_apply(&data, &data).unwrap();
        prop_assert_eq!(&train, &test);
        let s = train.standardization().unwrap();
        let n = train.n_samples() as f64;
        for (j, col) in train.features().columns().into_iter().enumerate() {
            if s.constant[j] {
                prop_assert_eq!(col, data.features().column(j));
                continue;
            }
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9, "column {} mean {} sd {}", j, mean, sd);
        }
    }

    #[test]
    fn encodings_round_trip(
        rows in prop::collection::vec((0u8..3, -50i32..50, 0u8..4, any::<bool>()), 1..40)
    ) {
        let schema: Schema = serde_json::from_str(r#"{
            "delimiter": "comma",
            "positive_label": "good",
            "fields": [
                {"name": "colour", "kind": "categorical"},
                {"name": "amount", "kind": "numeric"},
                {"name": "grade", "kind": "categorical"},
                {"name": "class", "kind": "label"}
            ]
        }"#).unwrap();
        let text: String = rows
            .iter()
            .map(|(c, a, g, y)| format!("{},{},{},{}\n", ["red", "green", "blue"][*c as usize], a, ["A", "B", "C", "D"][*g as usize], if *y { "good" } else { "bad" }))
            .collect();
        let table = parse_table(&text, &schema, "?").unwrap();
        let levels = |col: usize| -> usize {
            let mut seen: Vec<u8> = rows.iter().map(|r| if col == 0 { r.0 } else { r.2 }).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        };
        let dummy_enc = Encoder::fit(&table, Encoding::Dummy).unwrap();
        let dummy = dummy_enc.transform(&table).unwrap();
        prop_assert_eq!(dummy.n_features(), levels(0) + 1 + levels(2));
        for row in dummy.features().rows() {
            let colour_hot: f64 = row.iter().take(levels(0)).sum();
            prop_assert_eq!(colour_hot, 1.0);
        }
        let int_enc = Encoder::fit(&table, Encoding::Integer).unwrap();
        let integer = int_enc.transform(&table).unwrap();
        prop_assert_eq!(integer.n_features(), 3);
        for enc_and_data in [(&dummy_enc, &dummy), (&int_enc, &integer)] {
            let decoded = enc_and_data.0.decode(enc_and_data.1).unwrap();
            prop_assert_eq!(decoded.rows(), table.rows());
        }
        prop_assert_eq!(dummy.labels(), integer.labels());
        prop_assert_eq!(dummy.labels().iter().filter(|&&y| y == 1).count(), rows.iter().filter(|r| r.3).count());
    }
}

#[test]
fn csv_export_round_trips() {
    let data = dataset(vec![(vec![0.1, -2.5e-7], 1), (vec![1.0 / 3.0, 4.0], 0), (vec![f64::MAX, -0.0], 1)]);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x0,x1,label\n"));
    assert_eq!(EncodedDataset::read_csv(buf.as_slice()).unwrap(), data);
}
