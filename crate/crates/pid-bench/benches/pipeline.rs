use criterion::{criterion_group, criterion_main, Criterion};

use pid_bench::bench_sheet;
use pid_core::geometry::convex_hull;
use pid_core::lines::{detect_solid_lines, LineDetectConfig};
use pid_core::morph::{open, LineKernel};
use pid_core::raster::BinarizePolicy;
use pid_core::symbols::{template_localize, TemplateBank};
use pid_core::Orientation;

fn bench_morphology(c: &mut Criterion) {
    let sheet = bench_sheet();
    let bin = sheet.image.binarize(BinarizePolicy::Otsu);
    let kernel = LineKernel::new(Orientation::Horizontal, 5);
    c.bench_function("morph_open_1024", |b| b.iter(|| open(&bin, kernel)));
}

fn bench_solid_lines(c: &mut Criterion) {
    let sheet = bench_sheet();
    let bin = sheet.image.binarize(BinarizePolicy::Otsu);
    let cfg = LineDetectConfig::default();
    c.bench_function("solid_lines_1024", |b| b.iter(|| detect_solid_lines(&bin, &cfg)));
}

fn bench_hull(c: &mut Criterion) {
    let pts: Vec<pid_core::Point> = (0..2000)
        .map(|i| {
            let a = i as f64 * 0.013;
            pid_core::Point::new(
                (500.0 + 400.0 * a.cos() * (1.0 + 0.3 * (5.0 * a).sin())) as i32,
                (500.0 + 400.0 * a.sin() * (1.0 + 0.3 * (7.0 * a).cos())) as i32,
            )
        })
        .collect();
    c.bench_function("convex_hull_2000", |b| b.iter(|| convex_hull(&pts)));
}

fn bench_localize(c: &mut Criterion) {
    let bank = TemplateBank::builtin();
    let mut patch = pid_core::GrayRaster::new(400, 400, 255);
    let sym = pid_core::dataset::render_symbol(7, 64, 0).unwrap();
    pid_core::text::glyph::blit_min(&mut patch, &sym, 160, 170);
    c.bench_function("template_localize_400", |b| {
        b.iter(|| template_localize(&patch, &bank))
    });
}

criterion_group!(benches, bench_morphology, bench_solid_lines, bench_hull, bench_localize);
criterion_main!(benches);
