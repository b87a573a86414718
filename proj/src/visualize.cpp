#include "grounding/visualize.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "grounding/error.hpp"
#include "grounding/evaluation.hpp"
#include "grounding/model.hpp"
#include "grounding/text_pipeline.hpp"

namespace grounding {

namespace {

struct Rgb {
  unsigned char r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), pixels_(static_cast<size_t>(w) * h, Rgb{255, 255, 255}) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    pixels_[static_cast<size_t>(y) * w_ + x] = c;
  }

  void stroke_rect(const BoundingBox& b, Rgb c, int thickness) {
    const int x1 = static_cast<int>(b.x1), y1 = static_cast<int>(b.y1);
    const int x2 = static_cast<int>(b.x2), y2 = static_cast<int>(b.y2);
    for (int t = 0; t < thickness; ++t) {
      for (int x = x1 - t; x <= x2 + t; ++x) {
        set(x, y1 - t, c);
        set(x, y2 + t, c);
      }
      for (int y = y1 - t; y <= y2 + t; ++y) {
        set(x1 - t, y, c);
        set(x2 + t, y, c);
      }
    }
  }

  void write_png(const std::string& path) const {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw Error(ErrorKind::Io, "cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      if (png) png_destroy_write_struct(&png, &info);
      std::fclose(fp);
      throw Error(ErrorKind::Internal, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      std::fclose(fp);
      throw Error(ErrorKind::Io, "libpng write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(w_) * 3);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const Rgb& p = pixels_[static_cast<size_t>(y) * w_ + x];
        row[static_cast<size_t>(x) * 3 + 0] = p.r;
        row[static_cast<size_t>(x) * 3 + 1] = p.g;
        row[static_cast<size_t>(x) * 3 + 2] = p.b;
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
  }

 private:
  int w_, h_;
  std::vector<Rgb> pixels_;
};

const Rgb kPalette[] = {
    {220, 60, 60}, {60, 120, 220}, {60, 170, 90}, {230, 150, 40}, {150, 80, 200}, {0, 160, 160},
};

}  // namespace

int visualize_predictions(const Model& model, const World& world, const std::string& out_dir,
                          int max_scenes) {
  std::filesystem::create_directories(out_dir);
  int written = 0;
  const int limit = max_scenes > 0 ? max_scenes : static_cast<int>(world.scenes.size());
  for (int si = 0; si < limit && si < static_cast<int>(world.scenes.size()); ++si) {
    const SceneRecord& scene = world.scenes[static_cast<size_t>(si)];
    for (size_t ci = 0; ci < scene.captions.size(); ++ci) {
      Canvas canvas(static_cast<int>(world.canvas_w), static_cast<int>(world.canvas_h));
      for (const auto& r : scene.regions) canvas.stroke_rect(r.box, Rgb{210, 210, 210}, 1);
      for (const auto& g : scene.gold)
        if (g.caption_index == static_cast<int>(ci)) canvas.stroke_rect(g.box, Rgb{30, 30, 30}, 1);
      const auto phrases = chunk_caption(scene.captions[ci]);
      for (const auto& p : phrases) {
        const BoundingBox pred = model.localize(scene, p.tokens);
        canvas.stroke_rect(pred, kPalette[static_cast<size_t>(p.k) % std::size(kPalette)], 2);
      }
      char name[96];
      std::snprintf(name, sizeof(name), "%s_cap%zu.png", scene.scene_id.c_str(), ci);
      canvas.write_png((std::filesystem::path(out_dir) / name).string());
      ++written;
    }
  }
  return written;
}

}  // namespace grounding
