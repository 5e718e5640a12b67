// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dataset container: <dir>/samples.dsc + <dir>/manifest.json.
//
// samples.dsc: magic "DSC1", u32 version, u64 record count, then per record
// (little-endian, no padding):
//   u16 width, height, channels
//   u8  image[W*H*C]
//   f32 poseOneHot[M]
//   u8  visibility[K]            (1 = occluded)
//   f32 keypoints2D[2K]          (normalized x,y)
//   f32 keypoints3D[3K]
//   u8  occlusionClass
//   u64 seed
//   u8  category
//   f64 camera[9]                (azimuth, elevation, distance, focal,
//                                 ppx, ppy, target xyz)
//   f64 crop[4]                  (scale_x, scale_y, offset_x, offset_y)
//   u8  paramCount
//   f64 params[paramCount]
//
// M and K are dataset-wide and live in the manifest.

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "disco/datagen/datagen.hpp"
#include "disco/error.hpp"

namespace disco::datagen {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ostream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V get(std::istream& in) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) raise(Errc::FormatError, "truncated dataset record");
  return value;
}

template <typename V>
void put_vec(std::ostream& out, const std::vector<V>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(V)));
}

template <typename V>
void get_vec(std::istream& in, std::vector<V>& v, std::size_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(V)));
  if (!in) raise(Errc::FormatError, "truncated dataset record");
}

void write_record(std::ostream& out, const RenderedSample& s) {
  put(out, s.width);
  put(out, s.height);
  put(out, s.channels);
  put_vec(out, s.image);
  put_vec(out, s.pose_onehot);
  put_vec(out, s.visibility);
  put_vec(out, s.keypoints_2d);
  put_vec(out, s.keypoints_3d);
  put(out, static_cast<std::uint8_t>(s.occlusion_class));
  put(out, s.meta.seed);
  put(out, static_cast<std::uint8_t>(s.meta.category));
  const skelgeom::Camera& c = s.meta.camera;
  for (double v : {c.azimuth, c.elevation, c.distance, c.focal,
                   c.principal_point.x(), c.principal_point.y(), c.target.x(),
                   c.target.y(), c.target.z()})
    put(out, v);
  for (double v : {s.meta.crop.scale_x, s.meta.crop.scale_y,
                   s.meta.crop.offset_x, s.meta.crop.offset_y})
    put(out, v);
  put(out, static_cast<std::uint8_t>(s.meta.params.size()));
  put_vec(out, s.meta.params);
}

RenderedSample read_record(std::istream& in, const DatasetManifest& m) {
  RenderedSample s;
  s.width = get<std::uint16_t>(in);
  s.height = get<std::uint16_t>(in);
  s.channels = get<std::uint16_t>(in);
  if (s.width != m.width || s.height != m.height || s.channels != m.channels)
    raise(Errc::FormatError, "record image size disagrees with manifest");
  get_vec(in, s.image,
          static_cast<std::size_t>(s.width) * s.height * s.channels);
  get_vec(in, s.pose_onehot, static_cast<std::size_t>(m.bins));
  get_vec(in, s.visibility, static_cast<std::size_t>(m.keypoints));
  get_vec(in, s.keypoints_2d, static_cast<std::size_t>(2 * m.keypoints));
  get_vec(in, s.keypoints_3d, static_cast<std::size_t>(3 * m.keypoints));
  const std::uint8_t cls = get<std::uint8_t>(in);
  if (cls > 2) raise(Errc::FormatError, "bad occlusion class byte");
  s.occlusion_class = static_cast<OcclusionClass>(cls);
  s.meta.seed = get<std::uint64_t>(in);
  const std::uint8_t cat = get<std::uint8_t>(in);
  if (cat > 2) raise(Errc::FormatError, "bad category byte");
  s.meta.category = static_cast<Category>(cat);
  skelgeom::Camera& c = s.meta.camera;
  c.azimuth = get<double>(in);
  c.elevation = get<double>(in);
  c.distance = get<double>(in);
  c.focal = get<double>(in);
  c.principal_point.x() = get<double>(in);
  c.principal_point.y() = get<double>(in);
  c.target.x() = get<double>(in);
  c.target.y() = get<double>(in);
  c.target.z() = get<double>(in);
  c.width = s.width;
  c.height = s.height;
  s.meta.crop.scale_x = get<double>(in);
  s.meta.crop.scale_y = get<double>(in);
  s.meta.crop.offset_x = get<double>(in);
  s.meta.crop.offset_y = get<double>(in);
  const std::uint8_t pc = get<std::uint8_t>(in);
  get_vec(in, s.meta.params, pc);
  return s;
}

std::string data_file(const std::string& dir) { return dir + "/samples.dsc"; }
std::string manifest_file(const std::string& dir) { return dir + "/manifest.json"; }

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != 1)
    raise(Errc::FormatError, "unsupported manifest schema version");
  m.bins = j.at("bins").get<int>();
  m.keypoints = j.at("keypoints").get<int>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.channels = j.at("channels").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (int i = 0; i < 3; ++i) {
    m.class_counts[static_cast<std::size_t>(i)] =
        j.at("class_counts").at(static_cast<std::size_t>(i)).get<std::int64_t>();
    m.category_counts[static_cast<std::size_t>(i)] =
        j.at("category_counts").at(static_cast<std::size_t>(i)).get<std::int64_t>();
  }
  m.offsets = j.at("offsets").get<std::vector<std::uint64_t>>();
  m.classes = j.at("classes").get<std::vector<std::uint8_t>>();
  m.categories = j.at("categories").get<std::vector<std::uint8_t>>();
  m.validate();
  return m;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return nlohmann::json{{"schema_version", m.schema_version},
                        {"bins", m.bins},
                        {"keypoints", m.keypoints},
                        {"width", m.width},
                        {"height", m.height},
                        {"channels", m.channels},
                        {"seed", m.seed},
                        {"class_counts", m.class_counts},
                        {"category_counts", m.category_counts},
                        {"offsets", m.offsets},
                        {"classes", m.classes},
                        {"categories", m.categories}};
}

}  // namespace

void DatasetManifest::validate() const {
  if (offsets.size() != classes.size() || offsets.size() != categories.size())
    raise(Errc::FormatError, "manifest arrays disagree in length");
  std::int64_t class_total = 0, cat_total = 0;
  for (std::int64_t c : class_counts) class_total += c;
  for (std::int64_t c : category_counts) cat_total += c;
  if (class_total != record_count() || cat_total != record_count())
    raise(Errc::FormatError, "manifest counts do not sum to record count");
  for (std::size_t i = 1; i < offsets.size(); ++i)
    if (offsets[i] <= offsets[i - 1])
      raise(Errc::FormatError, "manifest offsets not strictly increasing");
}

DatasetManifest write_dataset(const std::vector<RenderedSample>& samples,
                              const std::string& dir,
                              const DatasetHeader& header) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.bins = header.bins;
  m.keypoints = header.keypoints;
  m.width = header.width;
  m.height = header.height;
  m.channels = header.channels;
  m.seed = header.seed;

  std::ofstream out(data_file(dir), std::ios::binary);
  if (!out) raise(Errc::IoError, "cannot open " + data_file(dir));
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(samples.size()));

  for (const RenderedSample& s : samples) {
    if (static_cast<int>(s.pose_onehot.size()) != m.bins ||
        static_cast<int>(s.visibility.size()) != m.keypoints)
      raise(Errc::ShapeError, "sample label sizes disagree with dataset header");
    m.offsets.push_back(static_cast<std::uint64_t>(out.tellp()));
    m.classes.push_back(static_cast<std::uint8_t>(s.occlusion_class));
    m.categories.push_back(static_cast<std::uint8_t>(s.meta.category));
    ++m.class_counts[static_cast<std::size_t>(s.occlusion_class)];
    ++m.category_counts[static_cast<std::size_t>(s.meta.category)];
    write_record(out, s);
  }
  if (!out) raise(Errc::IoError, "failed writing " + data_file(dir));
  out.close();

  std::ofstream mf(manifest_file(dir));
  if (!mf) raise(Errc::IoError, "cannot open " + manifest_file(dir));
  mf << manifest_to_json(m).dump(2) << "\n";
  if (!mf) raise(Errc::IoError, "failed writing " + manifest_file(dir));
  return m;
}

DatasetManifest load_manifest(const std::string& dir) {
  std::ifstream mf(manifest_file(dir));
  if (!mf) raise(Errc::IoError, "cannot open " + manifest_file(dir));
  nlohmann::json j;
  try {
    mf >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::FormatError, std::string("bad manifest json: ") + e.what());
  }
  try {
    return manifest_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::FormatError, std::string("bad manifest fields: ") + e.what());
  }
}

namespace {

void check_data_header(std::istream& in, std::int64_t expected_records) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    raise(Errc::FormatError, "bad dataset magic");
  if (get<std::uint32_t>(in) != kVersion)
    raise(Errc::FormatError, "unsupported dataset version");
  if (get<std::uint64_t>(in) != static_cast<std::uint64_t>(expected_records))
    raise(Errc::FormatError, "dataset record count disagrees with manifest");
}

}  // namespace

std::vector<RenderedSample> read_dataset(const std::string& dir) {
  const DatasetManifest m = load_manifest(dir);
  std::ifstream in(data_file(dir), std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + data_file(dir));
  check_data_header(in, m.record_count());
  std::vector<RenderedSample> samples;
  samples.reserve(static_cast<std::size_t>(m.record_count()));
  for (std::int64_t i = 0; i < m.record_count(); ++i)
    samples.push_back(read_record(in, m));
  return samples;
}

DatasetReader::DatasetReader(const std::string& dir)
    : manifest_(load_manifest(dir)), data_path_(data_file(dir)) {
  stream_.open(data_path_, std::ios::binary);
  if (!stream_) raise(Errc::IoError, "cannot open " + data_path_);
  check_data_header(stream_, manifest_.record_count());
}

DatasetReader::~DatasetReader() = default;

RenderedSample DatasetReader::read(std::int64_t index) const {
  if (index < 0 || index >= manifest_.record_count())
    raise(Errc::ConfigError, "dataset record index out of range");
  stream_.clear();
  stream_.seekg(static_cast<std::streamoff>(
      manifest_.offsets[static_cast<std::size_t>(index)]));
  if (!stream_) raise(Errc::FormatError, "seek past end of dataset");
  return read_record(stream_, manifest_);
}

}  // namespace disco::datagen
