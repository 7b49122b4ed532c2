#include "disparity/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "disparity/errors.hpp"

namespace disparity {
namespace {

constexpr char kMagic[8] = {'D', 'S', 'P', 'K', 'A', 'R', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void vec(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
    }
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() {
    if (pos_ >= bytes_.size()) throw DataError("archive truncated");
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (pos_ + n > bytes_.size()) throw DataError("archive truncated");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::VectorXd vec() {
    const std::uint32_t n = u32();
    check_plausible(n);
    Eigen::VectorXd v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  Eigen::MatrixXd mat() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    check_plausible(static_cast<std::uint64_t>(rows) * cols);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t c = 0; c < cols; ++c) {
      for (std::uint32_t r = 0; r < rows; ++r) m(r, c) = f64();
    }
    return m;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void check_plausible(std::uint64_t count) const {
    if (count * 8 > bytes_.size()) {
      throw DataError("archive declares more data than the file holds");
    }
  }
  std::vector<char> bytes_;
  size_t pos_ = 0;
};

void write_feature_config(Writer& w, const FeatureConfig& c) {
  w.f64(c.window_size);
  w.f64(c.window_shift);
  w.u32(static_cast<std::uint32_t>(c.num_filters));
  w.u32(static_cast<std::uint32_t>(c.num_ceps));
  w.f64(c.min_freq);
  w.f64(c.max_freq);
  w.u8(c.use_delta ? 1 : 0);
  w.u8(c.include_c0 ? 1 : 0);
  w.f64(c.pre_emphasis);
  w.u8(c.window_function == WindowFunction::kRectangular ? 1 : 0);
}

FeatureConfig read_feature_config(Reader& r) {
  FeatureConfig c;
  c.window_size = r.f64();
  c.window_shift = r.f64();
  c.num_filters = static_cast<int>(r.u32());
  c.num_ceps = static_cast<int>(r.u32());
  c.min_freq = r.f64();
  c.max_freq = r.f64();
  c.use_delta = r.u8() != 0;
  c.include_c0 = r.u8() != 0;
  c.pre_emphasis = r.f64();
  c.window_function =
      r.u8() != 0 ? WindowFunction::kRectangular : WindowFunction::kHamming;
  return c;
}

void write_em_config(Writer& w, const EmConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.num_components));
  w.u32(static_cast<std::uint32_t>(c.max_iters));
  w.f64(c.rel_tol);
  w.f64(c.variance_floor);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.num_restarts));
}

EmConfig read_em_config(Reader& r) {
  EmConfig c;
  c.num_components = static_cast<int>(r.u32());
  c.max_iters = static_cast<int>(r.u32());
  c.rel_tol = r.f64();
  c.variance_floor = r.f64();
  c.seed = r.u64();
  c.num_restarts = static_cast<int>(r.u32());
  return c;
}

void append_hex(std::ostringstream& out, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  out << buf;
}

void append_matrix_text(std::ostringstream& out, const std::string& label,
                        const Eigen::MatrixXd& m) {
  out << label << ' ' << m.rows() << 'x' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << " ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ' ';
      append_hex(out, m(r, c));
    }
    out << '\n';
  }
}

}  // namespace

void save_archive(const ModelArchive& archive, const std::string& path) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  write_feature_config(w, archive.feature_config);
  write_em_config(w, archive.em_config);
  w.u8(archive.use_pct ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(archive.speakers.size()));
  for (const auto& [id, model] : archive.speakers) {
    w.str(id);
    w.u8(model.use_pct ? 1 : 0);
    w.u64(model.feature_fingerprint);
    w.vec(model.gmm.weights());
    w.mat(model.gmm.means());
    w.mat(model.gmm.variances());
    if (model.use_pct) {
      w.mat(model.pct.rotation);
      w.vec(model.pct.eigenvalues);
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp + "' for writing");
    out.write(w.bytes().data(),
              static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw DataError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move archive into place at '" + path + "'");
  }
}

ModelArchive load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));

  for (char expected : kMagic) {
    if (static_cast<char>(r.u8()) != expected) {
      throw DataError("'" + path + "' is not a speaker-model archive");
    }
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported archive version " + std::to_string(version));
  }

  ModelArchive archive;
  archive.feature_config = read_feature_config(r);
  archive.em_config = read_em_config(r);
  archive.use_pct = r.u8() != 0;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = r.str();
    if (id.empty()) throw DataError("archive holds a speaker with empty id");
    SpeakerModel model{GmmModel(Eigen::VectorXd::Ones(1),
                                Eigen::MatrixXd::Zero(1, 1),
                                Eigen::MatrixXd::Ones(1, 1)),
                       PctTransform{}, false, 0};
    model.use_pct = r.u8() != 0;
    if (model.use_pct != archive.use_pct) {
      throw DataError("speaker '" + id +
                      "' disagrees with the archive rotation flag");
    }
    model.feature_fingerprint = r.u64();
    Eigen::VectorXd weights = r.vec();
    Eigen::MatrixXd means = r.mat();
    Eigen::MatrixXd variances = r.mat();
    try {
      model.gmm = GmmModel(std::move(weights), std::move(means),
                           std::move(variances));
    } catch (const std::invalid_argument& e) {
      throw DataError("speaker '" + id + "' holds an invalid mixture: " +
                      e.what());
    }
    if (model.use_pct) {
      model.pct.rotation = r.mat();
      model.pct.eigenvalues = r.vec();
      if (model.pct.rotation.rows() != model.pct.rotation.cols() ||
          model.pct.rotation.rows() != model.gmm.dim()) {
        throw DataError("speaker '" + id + "' holds a malformed rotation");
      }
    } else {
      // Not stored in the file; reconstruct the identity convention used by
      // training so a load is indistinguishable from the original model.
      const int d = model.gmm.dim();
      model.pct.rotation = Eigen::MatrixXd::Identity(d, d);
      model.pct.eigenvalues = Eigen::VectorXd::Ones(d);
    }
    if (!archive.speakers.emplace(std::move(id), std::move(model)).second) {
      throw DataError("archive holds a duplicate speaker id");
    }
  }
  if (!r.at_end()) {
    throw DataError("archive has trailing bytes after the last speaker");
  }
  return archive;
}

std::string archive_to_text(const ModelArchive& archive) {
  std::ostringstream out;
  const FeatureConfig& fc = archive.feature_config;
  out << "archive version " << kVersion << '\n';
  out << "feature.window_size ";
  append_hex(out, fc.window_size);
  out << "\nfeature.window_shift ";
  append_hex(out, fc.window_shift);
  out << "\nfeature.num_filters " << fc.num_filters;
  out << "\nfeature.num_ceps " << fc.num_ceps;
  out << "\nfeature.min_freq ";
  append_hex(out, fc.min_freq);
  out << "\nfeature.max_freq ";
  append_hex(out, fc.max_freq);
  out << "\nfeature.use_delta " << (fc.use_delta ? 1 : 0);
  out << "\nfeature.include_c0 " << (fc.include_c0 ? 1 : 0);
  out << "\nfeature.pre_emphasis ";
  append_hex(out, fc.pre_emphasis);
  out << "\nfeature.window_function " << window_function_name(fc.window_function);
  out << "\nem.num_components " << archive.em_config.num_components;
  out << "\nem.max_iters " << archive.em_config.max_iters;
  out << "\nem.rel_tol ";
  append_hex(out, archive.em_config.rel_tol);
  out << "\nem.variance_floor ";
  append_hex(out, archive.em_config.variance_floor);
  out << "\nem.seed " << archive.em_config.seed;
  out << "\nem.num_restarts " << archive.em_config.num_restarts;
  out << "\nuse_pct " << (archive.use_pct ? 1 : 0);
  out << "\nspeakers " << archive.speakers.size() << '\n';
  for (const auto& [id, model] : archive.speakers) {
    out << "speaker " << id << '\n';
    out << " fingerprint " << model.feature_fingerprint << '\n';
    out << " weights";
    for (Eigen::Index j = 0; j < model.gmm.weights().size(); ++j) {
      out << ' ';
      append_hex(out, model.gmm.weights()[j]);
    }
    out << '\n';
    append_matrix_text(out, " means", model.gmm.means());
    append_matrix_text(out, " variances", model.gmm.variances());
    if (model.use_pct) {
      append_matrix_text(out, " rotation", model.pct.rotation);
      out << " eigenvalues";
      for (Eigen::Index j = 0; j < model.pct.eigenvalues.size(); ++j) {
        out << ' ';
        append_hex(out, model.pct.eigenvalues[j]);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace disparity
