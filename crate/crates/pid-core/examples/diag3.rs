use pid_core::dataset::{generate_sheet, GenConfig};
use pid_core::symbols::{detect_complex_symbols, template_localize, SymbolDetectConfig, TemplateBank, TemplateClassifier, TemplateLocalizer};
use pid_core::Rect;

fn main() {
    let bank = TemplateBank::builtin();
    let cfg = GenConfig { seed: 23, symbols_per_sheet: 8, ..GenConfig::default() };
    let sheet = generate_sheet(&cfg, 0).unwrap();

    // crop around the two missed symbols on the top bus
    let crop = sheet.image.crop(Rect::new(1300, 80, 360, 220));
    let hits = template_localize(&crop, &bank);
    println!("crop localize hits:");
    for (r, s) in &hits {
        println!("  {:?} score {:.3}", r, s);
    }

    let dets = detect_complex_symbols(&sheet.image, &TemplateLocalizer { bank: &bank }, &TemplateClassifier { bank: &bank }, &SymbolDetectConfig::default());
    println!("full-sheet complex detections: {}", dets.len());
    for d in &dets {
        println!("  {:?} class {} score {:.3}", d.bbox, d.class_id, d.score);
    }
}
