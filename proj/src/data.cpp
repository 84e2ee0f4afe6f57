#include "genlabel/data.hpp"

#include "genlabel/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace genlabel {

int Dataset::label_of(Eigen::Index i) const {
  Eigen::Index c;
  labels.row(i).maxCoeff(&c);
  return static_cast<int>(c);
}

std::vector<int> Dataset::label_indices() const {
  std::vector<int> out(static_cast<size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out[static_cast<size_t>(i)] = label_of(i);
  return out;
}

std::vector<Eigen::Index> Dataset::class_counts() const {
  std::vector<Eigen::Index> counts(static_cast<size_t>(class_count), 0);
  for (Eigen::Index i = 0; i < size(); ++i) ++counts[static_cast<size_t>(label_of(i))];
  return counts;
}

void Dataset::validate() const {
  if (size() < 1 || dim() < 1) throw DataError("dataset '" + name + "' is empty");
  if (class_count < 2) throw DataError("dataset '" + name + "' needs at least two classes");
  if (labels.rows() != size() || labels.cols() != class_count)
    throw DataError("label matrix shape does not match features/class count");
  if (!features.allFinite()) throw DataError("dataset '" + name + "' has non-finite features");
  for (Eigen::Index i = 0; i < size(); ++i) {
    int ones = 0;
    for (Eigen::Index c = 0; c < class_count; ++c) {
      const double v = labels(i, c);
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw DataError("label row " + std::to_string(i) + " is not one-hot");
    }
    if (ones != 1) throw DataError("label row " + std::to_string(i) + " is not one-hot");
  }
}

Dataset make_dataset(MatrixXd features, const std::vector<int>& classes, int class_count,
                     std::string name) {
  if (static_cast<Eigen::Index>(classes.size()) != features.rows())
    throw DataError("class vector length does not match feature rows");
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = MatrixXd::Zero(ds.features.rows(), class_count);
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || classes[i] >= class_count)
      throw DataError("class id out of range at row " + std::to_string(i));
    ds.labels(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
  }
  ds.class_count = class_count;
  ds.name = std::move(name);
  for (int c = 0; c < class_count; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()), ds.class_count);
  for (size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(rows[i]);
    out.labels.row(static_cast<Eigen::Index>(i)) = ds.labels.row(rows[i]);
  }
  out.class_count = ds.class_count;
  out.name = ds.name;
  out.class_names = ds.class_names;
  out.feature_names = ds.feature_names;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generators

namespace {

double laplace(Rng& rng, double scale) {
  if (scale <= 0.0) return 0.0;
  std::exponential_distribution<double> expo(1.0 / scale);
  std::bernoulli_distribution coin(0.5);
  const double magnitude = expo(rng);
  return coin(rng) ? magnitude : -magnitude;
}

struct Builder {
  std::vector<std::array<double, 3>> rows;
  std::vector<int> classes;
  int dim = 2;

  void add(double a, double b, int c) {
    rows.push_back({a, b, 0.0});
    classes.push_back(c);
  }
  void add3(double a, double b, double z, int c) {
    rows.push_back({a, b, z});
    classes.push_back(c);
  }

  Dataset finish(int class_count, const std::string& name, Rng* shuffle_rng) {
    std::vector<size_t> order(rows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (shuffle_rng) std::shuffle(order.begin(), order.end(), *shuffle_rng);
    MatrixXd x(static_cast<Eigen::Index>(rows.size()), dim);
    std::vector<int> cls(rows.size());
    for (size_t i = 0; i < order.size(); ++i) {
      for (int j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = rows[order[i]][j];
      cls[i] = classes[order[i]];
    }
    return make_dataset(std::move(x), cls, class_count, name);
  }
};

// Two concentric rings sampled at evenly spaced angles, outer ring class
// `outer_class`, inner ring the other class, centred at (cx, 0).
void add_circles(Builder& b, int n_samples, double scale, double cx, int outer_class, Rng& rng) {
  const int n_out = n_samples / 2;
  const int n_in = n_samples - n_out;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < n_out; ++i) {
    const double t = two_pi * i / n_out;
    b.add(cx + std::cos(t) + laplace(rng, scale), std::sin(t) + laplace(rng, scale), outer_class);
  }
  for (int i = 0; i < n_in; ++i) {
    const double t = two_pi * i / n_in;
    b.add(cx + kCircleFactor * std::cos(t) + laplace(rng, scale),
          kCircleFactor * std::sin(t) + laplace(rng, scale), 1 - outer_class);
  }
}

}  // namespace

const std::vector<std::string>& synthetic_names() {
  static const std::vector<std::string> names = {"circle", "moon",   "two-circle", "cube2d",
                                                 "cube3d", "gauss9", "three-dots", "n-plus-2-dots"};
  return names;
}

Dataset make_synthetic(const std::string& name, int n_per_class, std::optional<double> noise,
                       std::uint64_t seed) {
  const auto& names = synthetic_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("unknown dataset id '" + name + "'");
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");

  Rng rng = make_rng(seed, "data");
  Builder b;

  if (name == "circle") {
    add_circles(b, 2 * n_per_class, noise.value_or(0.02), 0.0, 0, rng);
    return b.finish(2, name, &rng);
  }
  if (name == "two-circle") {
    // Each copy holds n_per_class points, so each class totals n_per_class.
    const double scale = noise.value_or(0.01);
    add_circles(b, n_per_class, scale, 0.0, 0, rng);
    add_circles(b, n_per_class, scale, kTwoCircleShift, 1, rng);
    return b.finish(2, name, &rng);
  }
  if (name == "moon") {
    const double scale = noise.value_or(0.1);
    for (int i = 0; i < n_per_class; ++i) {
      const double t = n_per_class > 1 ? std::numbers::pi * i / (n_per_class - 1) : 0.0;
      b.add(std::cos(t) + laplace(rng, scale), std::sin(t) + laplace(rng, scale), 0);
    }
    for (int i = 0; i < n_per_class; ++i) {
      const double t = n_per_class > 1 ? std::numbers::pi * i / (n_per_class - 1) : 0.0;
      b.add(1.0 - std::cos(t) + laplace(rng, scale), 0.5 - std::sin(t) + laplace(rng, scale), 1);
    }
    return b.finish(2, name, &rng);
  }
  if (name == "cube2d") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < n_per_class; ++i) b.add((c == 0 ? -1.0 : 1.0) + u(rng), u(rng), c);
    return b.finish(2, name, &rng);
  }
  if (name == "cube3d") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    b.dim = 3;
    for (int c = 0; c < 8; ++c) {
      const double m0 = (c & 4) ? 1.0 : -1.0;
      const double m1 = (c & 2) ? 1.0 : -1.0;
      const double m2 = (c & 1) ? 1.0 : -1.0;
      for (int i = 0; i < n_per_class; ++i) b.add3(m0 + u(rng), m1 + u(rng), m2 + u(rng), c);
    }
    return b.finish(8, name, &rng);
  }
  if (name == "gauss9") {
    const double var = noise.value_or(0.1);
    if (var < 0.0) throw ConfigError("gauss9 variance must be >= 0");
    std::normal_distribution<double> z(0.0, 1.0);
    const double sd = std::sqrt(var);
    for (int c = 0; c < 9; ++c) {
      const double m0 = -10.0 + 10.0 * (c / 3);
      const double m1 = -10.0 + 10.0 * (c % 3);
      for (int i = 0; i < n_per_class; ++i) b.add(m0 + sd * z(rng), m1 + sd * z(rng), c);
    }
    return b.finish(9, name, &rng);
  }
  if (name == "three-dots") {
    constexpr double d = 5.0;
    b.add(-d, d, 0);
    b.add(d, d, 1);
    b.add(-d, -d, 2);
    return b.finish(3, name, nullptr);
  }
  // n-plus-2-dots: class 0 is the +1 class.
  b.add(1.0, 0.0, 0);
  b.add(0.0, 1.0, 0);
  for (int i = 0; i < n_per_class; ++i) b.add(-1.0, 0.0, 1);
  return b.finish(2, name, nullptr);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  size_t a = 0, e = s.size();
  while (a < e && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (e > a && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(a, e - a));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

CsvLoadResult parse_csv(const std::string& text, const std::string& label_column,
                        const std::string& name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = split_row(line);
  if (header.size() < 2) throw DataError("CSV needs at least one feature column and a label column");

  size_t label_col = header.size() - 1;
  if (!label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw DataError("label column '" + label_column + "' not found");
    label_col = static_cast<size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> classes;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, int> class_index;
  size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    std::vector<double> feats;
    feats.reserve(header.size() - 1);
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) continue;
      const std::string& cell = cells[c];
      if (cell.empty())
        throw DataError("row " + std::to_string(row_no) + ", column '" + header[c] +
                        "': missing value");
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw DataError("row " + std::to_string(row_no) + ", column '" + header[c] +
                        "': non-numeric value '" + cell + "'");
      feats.push_back(v);
    }
    const std::string& lab = cells[label_col];
    if (lab.empty()) throw DataError("row " + std::to_string(row_no) + ": missing label");
    auto [it, inserted] = class_index.try_emplace(lab, static_cast<int>(class_names.size()));
    if (inserted) class_names.push_back(lab);
    classes.push_back(it->second);
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw DataError("CSV has no data rows");
  if (class_names.size() < 2) throw DataError("CSV contains a single class");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];

  CsvLoadResult result;
  result.data = make_dataset(std::move(x), classes, static_cast<int>(class_names.size()), name);
  result.data.class_names = class_names;
  for (size_t c = 0; c < header.size(); ++c)
    if (c != label_col) result.data.feature_names.push_back(header[c]);

  if (d > kMaxFeatures)
    result.warnings.push_back("dimensionality warning: " + std::to_string(d) +
                              " features exceeds " + std::to_string(kMaxFeatures));
  if (n >= kMaxSamples)
    result.warnings.push_back("size warning: " + std::to_string(n) + " samples is not below " +
                              std::to_string(kMaxSamples));
  return result;
}

CsvLoadResult load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_csv(buf.str(), label_column, stem);
}

std::string to_csv(const Dataset& ds) {
  std::ostringstream os;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    if (static_cast<size_t>(j) < ds.feature_names.size())
      os << ds.feature_names[static_cast<size_t>(j)];
    else
      os << 'x' << j;
    os << ',';
  }
  os << "label\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) os << format_double(ds.features(i, j)) << ',';
    const int c = ds.label_of(i);
    os << (static_cast<size_t>(c) < ds.class_names.size() ? ds.class_names[static_cast<size_t>(c)]
                                                           : std::to_string(c))
       << '\n';
  }
  return os.str();
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_csv(ds);
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(buf.str());
  return hex.str();
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  if (fold_count < 2) throw ConfigError("fold_count must be >= 2");
}

namespace {

bool can_stratify(const Dataset& ds, int min_per_class) {
  for (auto count : ds.class_counts())
    if (count < min_per_class) return false;
  return true;
}

std::vector<std::vector<Eigen::Index>> rows_by_class(const Dataset& ds) {
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<size_t>(ds.class_count));
  for (Eigen::Index i = 0; i < ds.size(); ++i) by_class[static_cast<size_t>(ds.label_of(i))].push_back(i);
  return by_class;
}

}  // namespace

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "split");
  SplitResult out;
  out.stratified = can_stratify(ds, spec.fold_count);
  if (out.stratified) {
    for (auto& rows : rows_by_class(ds)) {
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto n_train = static_cast<size_t>(std::llround(spec.train_fraction * static_cast<double>(rows.size())));
      out.train_rows.insert(out.train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
      out.test_rows.insert(out.test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::shuffle(out.train_rows.begin(), out.train_rows.end(), rng);
    std::shuffle(out.test_rows.begin(), out.test_rows.end(), rng);
  } else {
    std::vector<Eigen::Index> rows(static_cast<size_t>(ds.size()));
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<size_t>(std::llround(spec.train_fraction * static_cast<double>(rows.size())));
    out.train_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, rows.size())));
    out.test_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, rows.size())), rows.end());
  }
  if (out.train_rows.empty() || out.test_rows.empty())
    throw ConfigError("train_fraction " + std::to_string(spec.train_fraction) +
                      " leaves an empty train or test set");
  out.train = subset(ds, out.train_rows);
  out.test = subset(ds, out.test_rows);
  return out;
}

FoldAssignment fold_indices(const Dataset& ds, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw ConfigError("fold_count must be >= 2");
  if (ds.size() < fold_count) throw ConfigError("fewer samples than folds");
  Rng rng = make_rng(seed, "folds");
  FoldAssignment out;
  out.folds.resize(static_cast<size_t>(fold_count));
  out.stratified = can_stratify(ds, fold_count);
  size_t next = 0;
  auto deal = [&](std::vector<Eigen::Index>& rows) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) {
      out.folds[next].push_back(r);
      next = (next + 1) % out.folds.size();
    }
  };
  if (out.stratified) {
    for (auto& rows : rows_by_class(ds)) deal(rows);
  } else {
    std::vector<Eigen::Index> rows(static_cast<size_t>(ds.size()));
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
    deal(rows);
  }
  return out;
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> fold_split(
    const FoldAssignment& folds, int f) {
  std::vector<Eigen::Index> train_rows;
  for (size_t g = 0; g < folds.folds.size(); ++g)
    if (static_cast<int>(g) != f)
      train_rows.insert(train_rows.end(), folds.folds[g].begin(), folds.folds[g].end());
  std::sort(train_rows.begin(), train_rows.end());
  std::vector<Eigen::Index> val = folds.folds[static_cast<size_t>(f)];
  std::sort(val.begin(), val.end());
  return {train_rows, val};
}

MinMaxScaler MinMaxScaler::fit(const Dataset& ds) {
  MinMaxScaler s;
  s.lo = ds.features.colwise().minCoeff().transpose();
  s.hi = ds.features.colwise().maxCoeff().transpose();
  return s;
}

Dataset MinMaxScaler::apply(const Dataset& ds) const {
  Dataset out = ds;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    const double range = hi[j] - lo[j];
    if (range > 0.0)
      out.features.col(j) = (ds.features.col(j).array() - lo[j]) / range;
    else
      out.features.col(j).setZero();
  }
  return out;
}

}  // namespace genlabel
