#pragma once

#include "superpart/keyvalue.hpp"
#include "superpart/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace superpart {

// Rectangle origin + s*u + t*v for s,t in [0,1].
struct PlaneShape {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
};

// Axis-aligned box surface.
struct BoxShape {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  bool open_bottom = false;
};

// Vertical cylinder surface: lateral wall, optionally a top cap.
struct CylinderShape {
  Vec3 base = Vec3::Zero();  // center of the bottom circle
  double radius = 0.5;
  double height = 1.0;
  bool top_cap = false;
};

struct Primitive {
  std::variant<PlaneShape, BoxShape, CylinderShape> shape;
  std::uint32_t class_id = 0;
  double density = 1000.0;  // points per square meter
  Color color{0.5f, 0.5f, 0.5f};
  double color_noise = 0.0;
  std::optional<double> intensity;
  double noise_sigma = 0.0;  // isotropic Gaussian position noise, meters
};

struct SceneSpec {
  std::uint32_t num_classes = 0;  // 0: infer as max class id + 1
  std::vector<Primitive> primitives;

  void scale_density(double factor);
  double total_area() const;
  double expected_points() const;  // sum of density * area
};

double primitive_area(const Primitive& p);

// Format (see README):
//   [scene]      classes = C
//   [plane]      origin, u, v
//   [box]        min, max, open_bottom
//   [cylinder]   base, radius, height, top_cap
// Every primitive section takes class, density, color, color_noise,
// intensity, noise.
SceneSpec parse_scene_spec(const KeyValueDocument& doc);
SceneSpec read_scene_spec(const std::filesystem::path& path);

// Deterministic for a fixed seed. Each rectangular patch of area A receives
// exactly round(density * A) jittered-stratified samples.
PointCloud synth_scene(std::uint64_t seed, const SceneSpec& spec);

// Floor, wall, two boxes and a cylinder; three classes.
std::string default_scene_spec_text();

}  // namespace superpart
