use pid_core::dataset::{generate_sheet, GenConfig};
use pid_core::Rect;

fn main() {
    let cfg = GenConfig { seed: 23, symbols_per_sheet: 8, ..GenConfig::default() };
    let sheet = generate_sheet(&cfg, 0).unwrap();
    let crop = sheet.image.crop(Rect::new(1300, 80, 360, 220));
    std::fs::write("/root/scratch/crop_top.png", crop.to_png().unwrap()).unwrap();
    let crop2 = sheet.image.crop(Rect::new(1180, 680, 300, 200));
    std::fs::write("/root/scratch/crop_c23.png", crop2.to_png().unwrap()).unwrap();
    std::fs::write("/root/scratch/sheet23.png", sheet.image.to_png().unwrap()).unwrap();
}
