#pragma once

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <variant>

#include "evade/svm.hpp"
#include "evade/textio.hpp"

namespace evade {

using AnyModel = std::variant<SvmBinaryModel, MulticlassModel>;

// Versioned line-oriented text format. Doubles are written with 17
// significant digits, which strtod maps back to the identical bit pattern,
// so save/load round-trips are exact.
namespace model_format {

constexpr const char* kHeader = "evadesvm 1";
constexpr const char* kRestToken = "rest";

inline void append_class(std::ostringstream& out, int cls) {
  if (cls == kRestClass)
    out << kRestToken;
  else
    out << cls;
}

inline void append_binary(std::ostringstream& out, const SvmBinaryModel& m) {
  out << "model\n";
  out << "kernel " << (m.kernel.kind == KernelKind::Rbf ? "rbf " : "linear ")
      << fmt_double(m.kernel.gamma) << '\n';
  out << "cost " << fmt_double(m.cost) << '\n';
  out << "classes ";
  append_class(out, m.positive_class);
  out << ' ';
  append_class(out, m.negative_class);
  out << '\n';
  out << "bias " << fmt_double(m.bias) << '\n';
  out << "nsv " << m.n_sv() << '\n';
  out << "dim " << m.feature_count << '\n';
  out << "coefs";
  for (double c : m.dual_coefs) out << ' ' << fmt_double(c);
  out << '\n';
  for (std::size_t i = 0; i < m.n_sv(); ++i) {
    out << "sv";
    for (double v : m.support_vectors.row(i)) out << ' ' << fmt_double(v);
    out << '\n';
  }
  out << "end\n";
}

// Cursor-based scanner; strtod/strtol advance the pointer directly so large
// support-vector blocks parse without per-token allocation.
class Scanner {
public:
  explicit Scanner(const std::string& text) : cur_(text.c_str()) {}

  std::string word() {
    skip_space();
    const char* start = cur_;
    while (*cur_ && !std::isspace(static_cast<unsigned char>(*cur_))) ++cur_;
    if (cur_ == start) throw FormatError("model file: unexpected end of input");
    return std::string(start, cur_);
  }

  void expect(const char* token) {
    const std::string w = word();
    if (w != token)
      throw FormatError("model file: expected '" + std::string(token) + "', got '" + w + "'");
  }

  double number() {
    skip_space();
    char* end = nullptr;
    const double v = std::strtod(cur_, &end);
    if (end == cur_) throw FormatError("model file: expected a number");
    cur_ = end;
    return v;
  }

  long long integer() {
    skip_space();
    char* end = nullptr;
    const long long v = std::strtoll(cur_, &end, 10);
    if (end == cur_) throw FormatError("model file: expected an integer");
    cur_ = end;
    return v;
  }

  int class_id() {
    const std::string w = word();
    if (w == kRestToken) return kRestClass;
    char* end = nullptr;
    const long long v = std::strtoll(w.c_str(), &end, 10);
    if (end == w.c_str() || *end != '\0')
      throw FormatError("model file: bad class id '" + w + "'");
    return static_cast<int>(v);
  }

private:
  void skip_space() {
    while (*cur_ && std::isspace(static_cast<unsigned char>(*cur_))) ++cur_;
  }
  const char* cur_;
};

inline SvmBinaryModel parse_binary(Scanner& sc) {
  sc.expect("model");
  SvmBinaryModel m;
  sc.expect("kernel");
  const std::string kind = sc.word();
  if (kind == "rbf")
    m.kernel.kind = KernelKind::Rbf;
  else if (kind == "linear")
    m.kernel.kind = KernelKind::Linear;
  else
    throw FormatError("model file: unknown kernel '" + kind + "'");
  m.kernel.gamma = sc.number();
  if (m.kernel.kind == KernelKind::Rbf && !(m.kernel.gamma > 0.0))
    throw FormatError("model file: rbf gamma must be positive");
  sc.expect("cost");
  m.cost = sc.number();
  sc.expect("classes");
  m.positive_class = sc.class_id();
  m.negative_class = sc.class_id();
  sc.expect("bias");
  m.bias = sc.number();
  sc.expect("nsv");
  const long long nsv = sc.integer();
  sc.expect("dim");
  const long long dim = sc.integer();
  if (nsv < 1 || dim < 1) throw FormatError("model file: nsv and dim must be positive");
  m.feature_count = static_cast<std::size_t>(dim);
  m.dual_coefs.resize(static_cast<std::size_t>(nsv));
  sc.expect("coefs");
  for (auto& c : m.dual_coefs) c = sc.number();
  m.support_vectors = Matrix(static_cast<std::size_t>(nsv), static_cast<std::size_t>(dim));
  for (long long i = 0; i < nsv; ++i) {
    sc.expect("sv");
    for (auto& v : m.support_vectors.row(static_cast<std::size_t>(i))) v = sc.number();
  }
  sc.expect("end");
  return m;
}

}  // namespace model_format

inline std::string model_to_string(const SvmBinaryModel& m) {
  std::ostringstream out;
  out << model_format::kHeader << "\nbinary\n";
  model_format::append_binary(out, m);
  return out.str();
}

inline std::string model_to_string(const MulticlassModel& m) {
  std::ostringstream out;
  out << model_format::kHeader << "\nmulticlass " << m.classes.size() << "\nclasses";
  for (int c : m.classes) out << ' ' << c;
  out << '\n';
  for (const auto& sub : m.per_class_models) model_format::append_binary(out, sub);
  return out.str();
}

inline AnyModel model_from_string(const std::string& text) {
  model_format::Scanner sc(text);
  sc.expect("evadesvm");
  const long long version = sc.integer();
  if (version != 1)
    throw FormatError("model file: unsupported version " + std::to_string(version));
  const std::string kind = sc.word();
  if (kind == "binary") {
    return model_format::parse_binary(sc);
  }
  if (kind == "multiclass") {
    const long long k = sc.integer();
    if (k < 1) throw FormatError("model file: class count must be positive");
    MulticlassModel m;
    sc.expect("classes");
    m.classes.resize(static_cast<std::size_t>(k));
    for (auto& c : m.classes) c = sc.class_id();
    m.per_class_models.reserve(static_cast<std::size_t>(k));
    for (long long i = 0; i < k; ++i)
      m.per_class_models.push_back(model_format::parse_binary(sc));
    m.feature_count = m.per_class_models.front().feature_count;
    for (const auto& sub : m.per_class_models)
      if (sub.feature_count != m.feature_count)
        throw FormatError("model file: inconsistent feature counts across class models");
    return m;
  }
  throw FormatError("model file: unknown model kind '" + kind + "'");
}

template <typename ModelT>
void save_model(const ModelT& m, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_string(m));
}

inline AnyModel load_model(const std::filesystem::path& path) {
  return model_from_string(read_file(path));
}

// Feature-scaling parameters use the same exact-round-trip text format so a
// trained model's preprocessing can be replayed on new data.
inline std::string scaling_to_string(const ScaleParams& p) {
  std::ostringstream out;
  out << "evadescale 1\n";
  out << "target " << fmt_double(p.target.lo) << ' ' << fmt_double(p.target.hi) << '\n';
  out << "dim " << p.lo.size() << '\n';
  out << "lo";
  for (double v : p.lo) out << ' ' << fmt_double(v);
  out << "\nhi";
  for (double v : p.hi) out << ' ' << fmt_double(v);
  out << "\nend\n";
  return out.str();
}

inline ScaleParams scaling_from_string(const std::string& text) {
  model_format::Scanner sc(text);
  sc.expect("evadescale");
  if (sc.integer() != 1) throw FormatError("scaling file: unsupported version");
  ScaleParams p;
  sc.expect("target");
  p.target.lo = sc.number();
  p.target.hi = sc.number();
  sc.expect("dim");
  const long long dim = sc.integer();
  if (dim < 1) throw FormatError("scaling file: dim must be positive");
  p.lo.resize(static_cast<std::size_t>(dim));
  p.hi.resize(static_cast<std::size_t>(dim));
  sc.expect("lo");
  for (auto& v : p.lo) v = sc.number();
  sc.expect("hi");
  for (auto& v : p.hi) v = sc.number();
  sc.expect("end");
  return p;
}

inline void save_scaling(const ScaleParams& p, const std::filesystem::path& path) {
  write_file_atomic(path, scaling_to_string(p));
}

inline ScaleParams load_scaling(const std::filesystem::path& path) {
  return scaling_from_string(read_file(path));
}

}  // namespace evade
