#include "superpart/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace superpart {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Color parse_color(const KeyValueSection& s) {
  const Vec3 c = s.get_vec3("color");
  for (int d = 0; d < 3; ++d) {
    if (c[d] < 0.0 || c[d] > 1.0) throw InvalidInputError("color components must lie in [0,1]");
  }
  return {static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2])};
}

bool get_flag(const KeyValueSection& s, const std::string& key) {
  const auto v = s.find(key);
  if (!v) return false;
  if (*v == "true" || *v == "yes") return true;
  if (*v == "false" || *v == "no") return false;
  return s.get_int(key) != 0;
}

// Jittered stratified samples of the unit square: `rows` strips, each split
// into as many cells as it receives points.
template <typename Emit>
void stratified_unit_square(std::size_t n, double aspect, std::mt19937_64& rng, Emit&& emit) {
  if (n == 0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto rows = static_cast<std::size_t>(
      std::clamp<double>(std::round(std::sqrt(static_cast<double>(n) / aspect)), 1.0,
                         static_cast<double>(n)));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t lo = r * n / rows;
    const std::size_t hi = (r + 1) * n / rows;
    const std::size_t cols = hi - lo;
    for (std::size_t c = 0; c < cols; ++c) {
      const double s = (static_cast<double>(c) + unit(rng)) / static_cast<double>(cols);
      const double t = (static_cast<double>(r) + unit(rng)) / static_cast<double>(rows);
      emit(s, t);
    }
  }
}

std::size_t sample_count(double density, double area) {
  return static_cast<std::size_t>(std::llround(density * area));
}

class SceneWriter {
 public:
  SceneWriter(PointCloud& cloud, const Primitive& prim, bool with_intensity, std::mt19937_64& rng)
      : cloud_(cloud), prim_(prim), with_intensity_(with_intensity), rng_(rng) {}

  void add(const Vec3& p) {
    Vec3 q = p;
    if (prim_.noise_sigma > 0.0) {
      for (int d = 0; d < 3; ++d) q[d] += prim_.noise_sigma * normal_(rng_);
    }
    cloud_.positions.push_back(q);
    Color c = prim_.color;
    if (prim_.color_noise > 0.0) {
      for (float& ch : c) {
        ch = static_cast<float>(std::clamp(ch + prim_.color_noise * normal_(rng_), 0.0, 1.0));
      }
    }
    cloud_.colors->push_back(c);
    if (with_intensity_) cloud_.intensity->push_back(static_cast<float>(prim_.intensity.value_or(0.5)));
    cloud_.labels->push_back(prim_.class_id);
  }

  void rectangle(const Vec3& origin, const Vec3& u, const Vec3& v) {
    const double lu = u.norm();
    const double lv = v.norm();
    const std::size_t n = sample_count(prim_.density, lu * lv);
    stratified_unit_square(n, lu > 0 && lv > 0 ? lu / lv : 1.0, rng_,
                           [&](double s, double t) { add(origin + s * u + t * v); });
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  PointCloud& cloud_;
  const Primitive& prim_;
  bool with_intensity_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

void emit_shape(SceneWriter& w, const Primitive& prim, const PlaneShape& plane) {
  (void)prim;
  w.rectangle(plane.origin, plane.u, plane.v);
}

void emit_shape(SceneWriter& w, const Primitive& prim, const BoxShape& box) {
  (void)prim;
  const Vec3 d = box.max - box.min;
  const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
  const Vec3& o = box.min;
  if (!box.open_bottom) w.rectangle(o, ex, ey);
  w.rectangle(o + ez, ex, ey);
  w.rectangle(o, ex, ez);
  w.rectangle(o + ey, ex, ez);
  w.rectangle(o, ey, ez);
  w.rectangle(o + ex, ey, ez);
}

void emit_shape(SceneWriter& w, const Primitive& prim, const CylinderShape& cyl) {
  const double circumference = 2.0 * std::numbers::pi * cyl.radius;
  const std::size_t n_wall = sample_count(prim.density, circumference * cyl.height);
  stratified_unit_square(n_wall, cyl.height > 0 ? circumference / cyl.height : 1.0, w.rng(),
                         [&](double s, double t) {
                           const double a = 2.0 * std::numbers::pi * s;
                           w.add(cyl.base + Vec3(cyl.radius * std::cos(a), cyl.radius * std::sin(a),
                                                 t * cyl.height));
                         });
  if (cyl.top_cap) {
    const double area = std::numbers::pi * cyl.radius * cyl.radius;
    stratified_unit_square(sample_count(prim.density, area), 1.0, w.rng(), [&](double s, double t) {
      const double r = cyl.radius * std::sqrt(s);
      const double a = 2.0 * std::numbers::pi * t;
      w.add(cyl.base + Vec3(r * std::cos(a), r * std::sin(a), cyl.height));
    });
  }
}

}  // namespace

void SceneSpec::scale_density(double factor) {
  for (Primitive& p : primitives) p.density *= factor;
}

double primitive_area(const Primitive& p) {
  if (const auto* pl = std::get_if<PlaneShape>(&p.shape)) return pl->u.norm() * pl->v.norm();
  if (const auto* b = std::get_if<BoxShape>(&p.shape)) {
    const Vec3 d = b->max - b->min;
    return 2.0 * (d.x() * d.z() + d.y() * d.z()) + d.x() * d.y() * (b->open_bottom ? 1.0 : 2.0);
  }
  const auto& c = std::get<CylinderShape>(p.shape);
  double area = 2.0 * std::numbers::pi * c.radius * c.height;
  if (c.top_cap) area += std::numbers::pi * c.radius * c.radius;
  return area;
}

double SceneSpec::total_area() const {
  double area = 0.0;
  for (const Primitive& p : primitives) area += primitive_area(p);
  return area;
}

double SceneSpec::expected_points() const {
  double n = 0.0;
  for (const Primitive& p : primitives) n += p.density * primitive_area(p);
  return n;
}

SceneSpec parse_scene_spec(const KeyValueDocument& doc) {
  SceneSpec spec;
  for (const KeyValueSection& s : doc.sections) {
    if (s.name == "scene") {
      spec.num_classes = static_cast<std::uint32_t>(s.get_int("classes", 0));
      continue;
    }
    Primitive prim;
    if (s.name == "plane") {
      prim.shape = PlaneShape{s.get_vec3("origin"), s.get_vec3("u"), s.get_vec3("v")};
    } else if (s.name == "box") {
      BoxShape box{s.get_vec3("min"), s.get_vec3("max"), get_flag(s, "open_bottom")};
      if ((box.max.array() < box.min.array()).any()) {
        throw InvalidInputError("box max must be >= min (line " + std::to_string(s.line) + ")");
      }
      prim.shape = box;
    } else if (s.name == "cylinder") {
      CylinderShape cyl{s.get_vec3("base"), s.get_double("radius"), s.get_double("height"),
                        get_flag(s, "top_cap")};
      if (cyl.radius <= 0.0 || cyl.height <= 0.0) {
        throw InvalidInputError("cylinder radius and height must be positive");
      }
      prim.shape = cyl;
    } else {
      throw InvalidInputError("unknown scene section [" + s.name + "] on line " +
                              std::to_string(s.line));
    }
    const long long cls = s.get_int("class");
    if (cls < 0) throw InvalidInputError("class ids must be non-negative");
    prim.class_id = static_cast<std::uint32_t>(cls);
    prim.density = s.get_double("density");
    if (!(prim.density > 0.0)) throw InvalidInputError("density must be positive");
    if (s.has("color")) prim.color = parse_color(s);
    prim.color_noise = s.get_double("color_noise", 0.0);
    if (s.has("intensity")) prim.intensity = s.get_double("intensity");
    prim.noise_sigma = s.get_double("noise", 0.0);
    if (prim.noise_sigma < 0.0 || prim.color_noise < 0.0) {
      throw InvalidInputError("noise levels must be non-negative");
    }
    spec.primitives.push_back(prim);
  }
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  return parse_scene_spec(read_key_value_file(path));
}

PointCloud synth_scene(std::uint64_t seed, const SceneSpec& spec) {
  if (spec.primitives.empty()) throw InvalidInputError("scene spec has no primitives");

  std::uint32_t max_class = 0;
  bool with_intensity = false;
  for (const Primitive& p : spec.primitives) {
    max_class = std::max(max_class, p.class_id);
    with_intensity = with_intensity || p.intensity.has_value();
  }
  if (spec.num_classes != 0 && max_class >= spec.num_classes) {
    throw InvalidInputError("primitive class id exceeds declared class count");
  }

  PointCloud cloud;
  cloud.num_classes = spec.num_classes != 0 ? spec.num_classes : max_class + 1;
  cloud.colors.emplace();
  cloud.labels.emplace();
  if (with_intensity) cloud.intensity.emplace();

  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& prim = spec.primitives[i];
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i + 1)));
    SceneWriter writer(cloud, prim, with_intensity, rng);
    std::visit([&](const auto& shape) { emit_shape(writer, prim, shape); }, prim.shape);
  }
  if (cloud.positions.empty()) throw InvalidInputError("scene spec produced no points");
  return cloud;
}

std::string default_scene_spec_text() {
  return R"(# Room corner: floor, wall, two boxes, a cylinder.
[scene]
classes = 3

[plane]
class = 0
origin = 0 0 0
u = 6 0 0
v = 0 6 0
density = 1000
color = 0.55 0.50 0.45
color_noise = 0.02
noise = 0.005

[plane]
class = 1
origin = 0 6 0
u = 6 0 0
v = 0 0 3
density = 1000
color = 0.85 0.85 0.80
color_noise = 0.02
noise = 0.005

[box]
class = 2
min = 1 1 0
max = 2 2 0.8
open_bottom = 1
density = 1000
color = 0.70 0.25 0.20
color_noise = 0.02
noise = 0.005

[box]
class = 2
min = 3.5 2.5 0
max = 4.5 4.0 0.5
open_bottom = 1
density = 1000
color = 0.70 0.25 0.20
color_noise = 0.02
noise = 0.005

[cylinder]
class = 2
base = 4 0.9 0
radius = 0.3
height = 1.2
top_cap = 1
density = 1000
color = 0.20 0.35 0.70
color_noise = 0.02
noise = 0.005
)";
}

}  // namespace superpart
