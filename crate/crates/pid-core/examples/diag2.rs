use pid_core::dataset::{draw_line, render_symbol};
use pid_core::symbols::{template_localize, TemplateBank};
use pid_core::text::glyph::blit_min;
use pid_core::{GrayRaster, Point};

fn main() {
    let bank = TemplateBank::builtin();
    
    for class in 1..=25u8 {
        let mut canvas = GrayRaster::new(200, 200, 255);
        draw_line(&mut canvas, Point::new(0, 100), Point::new(200, 100), 3);
        let sym = render_symbol(class, 64, 0).unwrap();
        // clear window then blit like the generator does
        pid_core::dataset::fill_rect(&mut canvas, pid_core::Rect::new(62, 62, 76, 76), 255);
        blit_min(&mut canvas, &sym, 68, 68);
        let hits = template_localize(&canvas, &bank);
        let best = hits
            .iter()
            .map(|h| (h.1 * 1000.0) as i32)
            .max()
            .unwrap_or(-1);
        println!("class {class:2}: best localize score {:.3} ({} hits)", best as f64 / 1000.0, hits.len());
    }
}
