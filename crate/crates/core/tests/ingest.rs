use std::fs;
use std::path::{Path, PathBuf};

use agesal::gaze::{load_dataset, save_color_image, AgeGroup};
use agesal::raster::ColorImage;
use agesal::Error;

const HEADER: &str = "observer_id,group,image_id,x,y,ordinal\n";

/// Two 16x12 images: `a.png` and a PPM copy as `b`.
fn write_cohort(dir: &Path, csv: &str) -> PathBuf {
    let img = ColorImage::from_fn(16, 12, |x, y| [x as f64 / 15.0, y as f64 / 11.0, 0.5]);
    save_color_image(&img, &dir.join("a.png")).unwrap();
    save_color_image(&img, &dir.join("b.ppm")).unwrap();
    fs::write(dir.join("fix.csv"), csv).unwrap();
    let manifest = r#"{"images":[
        {"id":"a","path":"a.png","width":16,"height":12},
        {"id":"b","path":"b.ppm","width":16,"height":12}],
        "fixations_csv":"fix.csv"}"#;
    let path = dir.join("manifest.json");
    fs::write(&path, manifest).unwrap();
    path
}

fn twelve_fixations() -> String {
    let mut csv = String::from(HEADER);
    csv.push_str("# three observers, two groups\n");
    let observers = [("k1", "Y4"), ("k2", "Y4"), ("a1", "ADULT")];
    for (obs, group) in observers {
        for (img, base) in [("a", 1), ("b", 5)] {
            for ordinal in 0..2 {
                csv.push_str(&format!("{obs},{group},{img},{},{},{ordinal}\n", base + ordinal, 3 + ordinal));
            }
        }
    }
    csv
}

#[test]
fn loads_declared_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load_dataset(&write_cohort(dir.path(), &twelve_fixations())).unwrap();
    assert_eq!(ds.images().len(), 2);
    assert_eq!(ds.fixations().len(), 12);
    assert_eq!(ds.groups_present().iter().copied().collect::<Vec<_>>(), vec![AgeGroup::Y4, AgeGroup::Adult]);
    assert_eq!(ds.image("a"), ds.image("b"));
    assert_eq!(ds.fixated_pixels(AgeGroup::Adult, "b").unwrap(), vec![3 * 16 + 5, 4 * 16 + 6]);
}

#[test]
fn x_equal_to_width_names_image_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = format!("{HEADER}o,Y6,a,15,0,0\no,Y6,b,16,0,1\n");
    match load_dataset(&write_cohort(dir.path(), &csv)) {
        Err(e @ Error::Row { line, .. }) => {
            assert_eq!(line, 3);
            assert!(e.to_string().contains("`b`"), "{e}");
            assert!(e.is_validation());
        }
        other => panic!("expected a row error, got {other:?}"),
    }
}

#[test]
fn duplicate_fixation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = format!("{HEADER}o,Y8,a,1,1,0\no,Y8,a,2,2,0\n");
    let err = load_dataset(&write_cohort(dir.path(), &csv)).unwrap_err();
    assert!(err.to_string().contains("duplicate"), "{err}");
}

#[test]
fn manifest_dimension_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cohort(dir.path(), HEADER);
    let text = fs::read_to_string(&path).unwrap().replacen("\"width\":16", "\"width\":17", 1);
    fs::write(&path, text).unwrap();
    assert!(matches!(load_dataset(&path), Err(Error::Ingest { .. })));
}

#[test]
fn extra_duration_column_is_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "observer_id,group,image_id,x,y,ordinal,duration_ms\no,Y6,a,4,5,0,230\no,Y6,a,4,6,1,180\n";
    let ds = load_dataset(&write_cohort(dir.path(), csv)).unwrap();
    assert_eq!(ds.fixated_pixels(AgeGroup::Y6, "a").unwrap(), vec![5 * 16 + 4, 6 * 16 + 4]);
}
