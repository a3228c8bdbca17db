// Ingest a CSV export, project its labels onto the coarse scheme and drop
// texts too short to classify.

use std::error::Error;

use feedback_consensus::corpus::{adapt_to_coarse, ingest, DatasetMeta, InputFormat, SchemeMapping, Source, TokenCleaner};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("ds1.csv");
    std::fs::write(
        &path,
        "id,text,label,app_id\n\
         1,\"The app crashes every time I open a photo!\",bug report,Dropbox\n\
         2,Please add an option to export albums as PDF,user request,Pinterest\n\
         3,Love it,praise,WhatsApp\n\
         4,\"Works, but the sync icon is confusing on tablets\",feature shortcoming,Dropbox\n\
         5,Great app for sharing files with my family,praise,Dropbox\n",
    )?;

    let meta = DatasetMeta {
        dataset_id: "DS1".into(),
        source: Source::AppStore,
    };
    let raw = ingest(&path, InputFormat::Csv, &meta)?;
    let (coarse, unmapped) = adapt_to_coarse(&raw, &SchemeMapping::builtin("DS1")?)?;
    let cleaner = TokenCleaner::default();
    let (eligible, short) = coarse.filter_eligible(&cleaner);

    println!("ingested {}, unmapped {unmapped}, too short {short}, kept {}", raw.len(), eligible.len());
    for r in &eligible {
        println!("  {} {:?} -> {:?}", r.id, r.coarse_label, cleaner.clean(&r.text));
    }
    assert_eq!((raw.len(), unmapped, short, eligible.len()), (5, 1, 1, 3));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
