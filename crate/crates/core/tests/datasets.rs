use specbayes::dataio::{self, bundled_data_root, DatasetManifest};
use specbayes::priors::PriorLibrary;
use specbayes::{build_design_matrix, Error, Role, WavelengthGrid};

fn grid() -> WavelengthGrid {
    WavelengthGrid::VISIBLE_10NM
}

fn load(name: &str) -> specbayes::SpectrumSet {
    dataio::load_dataset(
        &bundled_data_root().join(name).join("manifest.json"),
        &grid(),
    )
    .unwrap()
}

#[test]
fn babelcolor_has_24_patches_within_bounds() {
    let set = load("babelcolor");
    assert_eq!(set.role(), Role::Reflectance);
    assert_eq!(set.len(), 24);
    assert!(set
        .members()
        .iter()
        .flat_map(|s| s.values())
        .all(|&v| (0.0..=1.0).contains(&v)));
    assert_eq!(set.labels()[0], "dark skin");
}

#[test]
fn nikon_channels_are_labelled() {
    let set = load("nikon5100");
    assert_eq!(set.role(), Role::Sensitivity);
    assert_eq!(set.labels(), ["R", "G", "B"]);
}

#[test]
fn d65_is_normalized_at_560() {
    let set = load("d65");
    let s = set.get(0).unwrap();
    assert_eq!(s.values()[16], 100.0);
    assert_eq!(grid().wavelength(16), 560.0);
}

#[test]
fn sensitivity_peaks_are_ordered() {
    let set = load("nikon5100");
    let argmax = |k: usize| {
        let v = set.get(k).unwrap().values();
        (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
    };
    assert!(argmax(2) < argmax(1) && argmax(1) < argmax(0));
}

#[test]
fn illumination_design_matrix_shape_and_range() {
    let refl = load("babelcolor");
    let sens = load("nikon5100")
        .map_members(|s| s.peak_normalized())
        .unwrap();
    let design = build_design_matrix(&refl, &sens).unwrap();
    assert_eq!((design.nrows(), design.ncols()), (72, 31));
    assert!(design.matrix().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn daylight_prior_mean_matches_file() {
    let lib = PriorLibrary::load(&bundled_data_root(), &grid(), None).unwrap();
    let raw = load("daylight_mean");
    let peak = raw.get(0).unwrap().max_value();
    for (a, b) in lib
        .daylight_mean()
        .values()
        .iter()
        .zip(raw.get(0).unwrap().values())
    {
        assert!((a - b / peak).abs() < 1e-15);
    }
}

#[test]
fn camera_database_loads_and_spans_channels() {
    let cams =
        dataio::load_camera_database(&bundled_data_root().join("camera_db/index.json"), &grid())
            .unwrap();
    assert!(cams.len() >= 20);
    assert!(cams
        .iter()
        .all(|c| c.len() == 3 && c.role() == Role::Sensitivity));
}

#[test]
fn sigma_dataset_does_not_cover_default_grid() {
    let path = bundled_data_root().join("sigma_sdmerill/manifest.json");
    let err = dataio::load_dataset(&path, &grid()).unwrap_err();
    assert!(matches!(err, Error::Dataset { .. }), "{err}");
    assert!(err.to_string().contains("outside the source range"));
    let narrow = WavelengthGrid::new(400.0, 10.0, 29).unwrap();
    assert_eq!(dataio::load_dataset(&path, &narrow).unwrap().len(), 3);
}

#[test]
fn manifests_record_provenance() {
    for entry in std::fs::read_dir(bundled_data_root()).unwrap().flatten() {
        let path = entry.path().join("manifest.json");
        if path.exists() {
            let m = DatasetManifest::read(&path).unwrap();
            assert!(
                !m.source.is_empty() && !m.license.is_empty(),
                "{}",
                path.display()
            );
        }
    }
}

#[test]
fn data_dir_override_is_honoured() {
    // Only this test touches the variable within this binary.
    std::env::set_var(dataio::DATA_DIR_ENV, "/nonexistent/spectra");
    assert_eq!(
        dataio::data_root(),
        std::path::PathBuf::from("/nonexistent/spectra")
    );
    std::env::remove_var(dataio::DATA_DIR_ENV);
    assert_eq!(dataio::data_root(), bundled_data_root());
}
