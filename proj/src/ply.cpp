#include "superpart/point_cloud.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace superpart {

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  if (n == 0) throw InvalidInputError("point cloud is empty");
  for (const Vec3& p : positions) {
    if (!p.allFinite()) throw InvalidInputError("point cloud has non-finite coordinates");
  }
  if (colors && colors->size() != n) throw InvalidInputError("color channel length mismatch");
  if (intensity && intensity->size() != n) {
    throw InvalidInputError("intensity channel length mismatch");
  }
  if (labels) {
    if (labels->size() != n) throw InvalidInputError("label channel length mismatch");
    for (std::uint32_t l : *labels) {
      if (l >= num_classes) throw InvalidInputError("label out of range of class count");
    }
  }
}

namespace {

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

bool is_integral(ScalarType t) { return t != ScalarType::kFloat32 && t != ScalarType::kFloat64; }

double integral_max(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
      return 127.0;
    case ScalarType::kUInt8:
      return 255.0;
    case ScalarType::kInt16:
      return 32767.0;
    case ScalarType::kUInt16:
      return 65535.0;
    case ScalarType::kInt32:
      return 2147483647.0;
    case ScalarType::kUInt32:
      return 4294967295.0;
    default:
      return 1.0;
  }
}

template <typename T>
T load_le(const char* p) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double decode_binary(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::kInt8:
      return load_le<std::int8_t>(p);
    case ScalarType::kUInt8:
      return load_le<std::uint8_t>(p);
    case ScalarType::kInt16:
      return load_le<std::int16_t>(p);
    case ScalarType::kUInt16:
      return load_le<std::uint16_t>(p);
    case ScalarType::kInt32:
      return load_le<std::int32_t>(p);
    case ScalarType::kUInt32:
      return load_le<std::uint32_t>(p);
    case ScalarType::kFloat32:
      return load_le<float>(p);
    case ScalarType::kFloat64:
      return load_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Channel { kNone, kX, kY, kZ, kRed, kGreen, kBlue, kIntensity, kLabel };

Channel channel_of(std::string_view name) {
  if (name == "x") return Channel::kX;
  if (name == "y") return Channel::kY;
  if (name == "z") return Channel::kZ;
  if (name == "red") return Channel::kRed;
  if (name == "green") return Channel::kGreen;
  if (name == "blue") return Channel::kBlue;
  if (name == "intensity") return Channel::kIntensity;
  if (name == "label" || name == "class") return Channel::kLabel;
  return Channel::kNone;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Collects decoded vertex rows into a PointCloud.
class VertexSink {
 public:
  VertexSink(const Element& vertex, const std::string& path) {
    channels_.reserve(vertex.properties.size());
    bool has_rgb[3] = {false, false, false};
    bool has_xyz[3] = {false, false, false};
    for (const Property& prop : vertex.properties) {
      const Channel c = channel_of(prop.name);
      if (prop.is_list) {
        throw UnsupportedFormatError(path + ": list property '" + prop.name +
                                     "' in vertex element is not supported");
      }
      switch (c) {
        case Channel::kX:
        case Channel::kY:
        case Channel::kZ:
          if (is_integral(prop.type)) {
            throw UnsupportedFormatError(path + ": coordinate '" + prop.name +
                                         "' must be float or double");
          }
          has_xyz[static_cast<int>(c) - static_cast<int>(Channel::kX)] = true;
          break;
        case Channel::kRed:
        case Channel::kGreen:
        case Channel::kBlue:
          if (prop.type != ScalarType::kUInt8) {
            throw UnsupportedFormatError(path + ": color '" + prop.name + "' must be uchar");
          }
          has_rgb[static_cast<int>(c) - static_cast<int>(Channel::kRed)] = true;
          break;
        case Channel::kIntensity:
          intensity_type_ = prop.type;
          has_intensity_ = true;
          break;
        case Channel::kLabel:
          if (!is_integral(prop.type)) {
            throw UnsupportedFormatError(path + ": label property must be an integer type");
          }
          has_label_ = true;
          break;
        case Channel::kNone:
          break;
      }
      channels_.push_back(c);
    }
    if (!(has_xyz[0] && has_xyz[1] && has_xyz[2])) {
      throw UnsupportedFormatError(path + ": vertex element lacks x, y, z properties");
    }
    has_color_ = has_rgb[0] && has_rgb[1] && has_rgb[2];
    cloud_.positions.resize(vertex.count);
    if (has_color_) cloud_.colors.emplace(vertex.count, Color{0.f, 0.f, 0.f});
    if (has_intensity_) cloud_.intensity.emplace(vertex.count, 0.f);
    if (has_label_) cloud_.labels.emplace(vertex.count, 0u);
  }

  void set(std::size_t row, std::size_t prop, double value) {
    switch (channels_[prop]) {
      case Channel::kX:
        cloud_.positions[row].x() = value;
        break;
      case Channel::kY:
        cloud_.positions[row].y() = value;
        break;
      case Channel::kZ:
        cloud_.positions[row].z() = value;
        break;
      case Channel::kRed:
        if (has_color_) (*cloud_.colors)[row][0] = static_cast<float>(value / 255.0);
        break;
      case Channel::kGreen:
        if (has_color_) (*cloud_.colors)[row][1] = static_cast<float>(value / 255.0);
        break;
      case Channel::kBlue:
        if (has_color_) (*cloud_.colors)[row][2] = static_cast<float>(value / 255.0);
        break;
      case Channel::kIntensity:
        (*cloud_.intensity)[row] = static_cast<float>(value);
        break;
      case Channel::kLabel:
        if (value < 0) throw InvalidInputError("negative label in PLY");
        (*cloud_.labels)[row] = static_cast<std::uint32_t>(value);
        break;
      case Channel::kNone:
        break;
    }
  }

  PointCloud finish() {
    if (has_intensity_) normalize_intensity();
    if (has_label_) {
      std::uint32_t max_label = 0;
      for (std::uint32_t l : *cloud_.labels) max_label = std::max(max_label, l);
      cloud_.num_classes = max_label + 1;
    }
    cloud_.validate();
    return std::move(cloud_);
  }

 private:
  void normalize_intensity() {
    auto& v = *cloud_.intensity;
    if (is_integral(intensity_type_)) {
      const double scale = integral_max(intensity_type_);
      for (float& x : v) x = static_cast<float>(std::clamp(x / scale, 0.0, 1.0));
      return;
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo >= 0.f && *hi <= 1.f) return;
    const float min_v = *lo;
    const float range = *hi - *lo;
    for (float& x : v) x = range > 0.f ? (x - min_v) / range : 0.f;
  }

  std::vector<Channel> channels_;
  PointCloud cloud_;
  bool has_color_ = false;
  bool has_intensity_ = false;
  bool has_label_ = false;
  ScalarType intensity_type_ = ScalarType::kFloat32;
};

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  const std::string path_str = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path_str + "'");
  std::string buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= buffer.size()) return std::nullopt;
    std::size_t end = buffer.find('\n', pos);
    if (end == std::string::npos) end = buffer.size();
    std::string_view line(buffer.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return line;
  };

  auto first = next_line();
  if (!first || *first != "ply") throw ParseError(path_str + ": missing 'ply' magic", line_no);

  std::optional<PlyEncoding> encoding;
  std::vector<Element> elements;
  bool header_done = false;
  while (auto line = next_line()) {
    const auto tok = split_ws(*line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw ParseError(path_str + ": malformed format line", line_no);
      if (tok[1] == "ascii") {
        encoding = PlyEncoding::kAscii;
      } else if (tok[1] == "binary_little_endian") {
        encoding = PlyEncoding::kBinaryLittleEndian;
      } else {
        throw UnsupportedFormatError(path_str + ": unsupported PLY format '" +
                                     std::string(tok[1]) + "'");
      }
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(path_str + ": malformed element line", line_no);
      Element e;
      e.name = std::string(tok[1]);
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (r.ec != std::errc()) throw ParseError(path_str + ": bad element count", line_no);
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(path_str + ": property before element", line_no);
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = parse_scalar_type(tok[2]);
        const auto vt = parse_scalar_type(tok[3]);
        if (!ct || !vt) {
          throw UnsupportedFormatError(path_str + ": unsupported list type on line " +
                                       std::to_string(line_no));
        }
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *vt;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        const auto t = parse_scalar_type(tok[1]);
        if (!t) {
          throw UnsupportedFormatError(path_str + ": unsupported property type '" +
                                       std::string(tok[1]) + "' on line " +
                                       std::to_string(line_no));
        }
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        throw ParseError(path_str + ": malformed property line", line_no);
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError(path_str + ": unknown header keyword '" + std::string(tok[0]) + "'",
                       line_no);
    }
  }
  if (!header_done) throw ParseError(path_str + ": missing end_header", line_no);
  if (!encoding) throw ParseError(path_str + ": missing format line", line_no);

  auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) {
    throw ParseError(path_str + ": no vertex element", line_no);
  }
  if (vertex_it->count == 0) throw InvalidInputError(path_str + ": point cloud is empty");
  const Element& vertex = *vertex_it;
  VertexSink sink(vertex, path_str);

  if (*encoding == PlyEncoding::kAscii) {
    for (auto it = elements.begin(); it != vertex_it; ++it) {
      for (std::size_t i = 0; i < it->count; ++i) {
        if (!next_line()) throw ParseError(path_str + ": unexpected end of file", line_no);
      }
    }
    for (std::size_t row = 0; row < vertex.count; ++row) {
      auto line = next_line();
      if (!line) throw ParseError(path_str + ": unexpected end of file", line_no + 1);
      const auto tok = split_ws(*line);
      if (tok.size() < vertex.properties.size()) {
        throw ParseError(path_str + ": too few values in vertex row", line_no);
      }
      for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
        double v = 0.0;
        const auto r = std::from_chars(tok[p].data(), tok[p].data() + tok[p].size(), v);
        if (r.ec != std::errc() || r.ptr != tok[p].data() + tok[p].size()) {
          throw ParseError(path_str + ": bad numeric value '" + std::string(tok[p]) + "'",
                           line_no);
        }
        sink.set(row, p, v);
      }
    }
    return sink.finish();
  }

  for (auto it = elements.begin(); it != vertex_it; ++it) {
    std::size_t row_bytes = 0;
    for (const Property& prop : it->properties) {
      if (prop.is_list) {
        throw UnsupportedFormatError(path_str + ": variable-size element '" + it->name +
                                     "' precedes vertex data");
      }
      row_bytes += scalar_size(prop.type);
    }
    pos += row_bytes * it->count;
  }
  std::size_t row_bytes = 0;
  std::vector<std::size_t> offsets;
  for (const Property& prop : vertex.properties) {
    offsets.push_back(row_bytes);
    row_bytes += scalar_size(prop.type);
  }
  if (pos > buffer.size() || (buffer.size() - pos) / row_bytes < vertex.count) {
    throw ParseError(path_str + ": binary payload shorter than header declares", line_no);
  }
  const char* base = buffer.data() + pos;
  for (std::size_t row = 0; row < vertex.count; ++row) {
    const char* rec = base + row * row_bytes;
    for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
      sink.set(row, p, decode_binary(vertex.properties[p].type, rec + offsets[p]));
    }
  }
  return sink.finish();
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, r.ptr);
}

template <typename T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

std::uint8_t quantize_color(float c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.f, 1.f) * 255.f));
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyEncoding encoding) {
  cloud.validate();
  std::string out;
  out += "ply\n";
  out += encoding == PlyEncoding::kAscii ? "format ascii 1.0\n"
                                         : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (cloud.colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.intensity) out += "property float intensity\n";
  if (cloud.labels) out += "property int label\n";
  out += "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    if (encoding == PlyEncoding::kAscii) {
      for (int d = 0; d < 3; ++d) {
        if (d) out += ' ';
        append_double(out, p[d]);
      }
      if (cloud.colors) {
        for (float c : (*cloud.colors)[i]) out += ' ' + std::to_string(quantize_color(c));
      }
      if (cloud.intensity) {
        out += ' ';
        append_double(out, (*cloud.intensity)[i]);
      }
      if (cloud.labels) out += ' ' + std::to_string((*cloud.labels)[i]);
      out += '\n';
    } else {
      for (int d = 0; d < 3; ++d) append_le<double>(out, p[d]);
      if (cloud.colors) {
        for (float c : (*cloud.colors)[i]) append_le<std::uint8_t>(out, quantize_color(c));
      }
      if (cloud.intensity) append_le<float>(out, (*cloud.intensity)[i]);
      if (cloud.labels) append_le<std::int32_t>(out, static_cast<std::int32_t>((*cloud.labels)[i]));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace superpart
