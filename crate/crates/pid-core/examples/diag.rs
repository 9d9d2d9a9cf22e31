use pid_core::config::PipelineConfig;
use pid_core::dataset::{generate_sheet, GenConfig, NoiseConfig};
use pid_core::eval::match_boxes;
use pid_core::pipeline::digitize;
use pid_core::symbols::TemplateBank;
use pid_core::Rect;

fn main() {
    let bank = TemplateBank::builtin();
    let pcfg = PipelineConfig::default();

    // clean sheet, text diagnostics
    let cfg = GenConfig { seed: 23, symbols_per_sheet: 8, ..GenConfig::default() };
    let sheet = generate_sheet(&cfg, 0).unwrap();
    let d = digitize(&sheet.image, &bank, &pcfg).unwrap();
    println!("truth texts: {}", sheet.annotation.texts.len());
    println!("pred texts:  {}", d.result.texts.len());
    let t: Vec<Rect> = sheet.annotation.texts.iter().map(|t| t.bbox).collect();
    let p: Vec<Rect> = d.result.texts.iter().map(|t| t.bbox).collect();
    let m = match_boxes(&t, &p, 0.5);
    println!("matched@0.5: {}", m.len());
    for (i, tb) in sheet.annotation.texts.iter().enumerate().take(30) {
        let hit = m.iter().find(|&&(ti, _, _)| ti == i);
        println!("  T {:?} {:?} -> {:?}", tb.text, tb.bbox, hit.map(|&(_, pi, iou)| (d.result.texts[pi].text.clone(), d.result.texts[pi].bbox, iou)));
    }
    for (i, pb) in d.result.texts.iter().enumerate() {
        if !m.iter().any(|&(_, pi, _)| pi == i) {
            println!("  FP {:?} {:?} conf {:.2}", pb.text, pb.bbox, pb.confidence);
        }
    }

    // symbol diagnostics
    println!("truth symbols: {}", sheet.annotation.symbols.len());
    for s in &sheet.annotation.symbols {
        println!("  T class {} {:?} label {:?}", s.class_id, s.bbox, s.label);
    }
    for s in &d.result.symbols {
        println!("  P class {} {:?} score {:.2} label {:?}", s.class_id, s.bbox, s.score, s.label);
    }

    // noisy dashed diagnostics
    let ncfg = GenConfig {
        seed: 11,
        noise: NoiseConfig { pixelation: 2, blur_sigma: 0.8, salt_pepper: 0.005 },
        ..GenConfig::default()
    };
    for i in 0..3u64 {
        let sheet = generate_sheet(&ncfg, i).unwrap();
        let d = digitize(&sheet.image, &bank, &pcfg).unwrap();
        let dashed_truth: Vec<_> = sheet.annotation.lines.iter().filter(|l| l.style == pid_core::lines::LineStyle::Dashed).collect();
        println!("sheet {i}: {} dashed truth", dashed_truth.len());
        for l in &dashed_truth {
            println!("  T dashed {:?}..{:?}", l.p1, l.p2);
        }
        for s in &d.segments {
            if s.style == pid_core::lines::LineStyle::Dashed {
                println!("  P dashed {:?}..{:?}", s.p1, s.p2);
            }
        }
        let solid_near: usize = d.segments.iter().filter(|s| s.style == pid_core::lines::LineStyle::Solid && dashed_truth.iter().any(|l| (s.perp_mid() - l.p1.y as f64).abs() < 4.0 && s.orientation == pid_core::Orientation::Horizontal)).count();
        println!("  solid segments near dashed truth rows: {solid_near}");
    }
}
// localizer probe appended via shell; see diag2
