#include "mad/data.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace mad {

TimeSeriesDataset gen_gaussian(int n, int length, int dim, int classes, std::uint64_t seed) {
  if (n < 1 || length < 1 || dim < 1 || classes < 1) throw InvalidInput("gen_gaussian: sizes must be positive");
  if (n % classes != 0) {
    throw InvalidInput("gen_gaussian: n = " + std::to_string(n) + " is not divisible by " +
                       std::to_string(classes) + " classes");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Series> values;
  std::vector<int> labels;
  values.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Series x(length, dim);
    for (int t = 0; t < length; ++t) {
      for (int f = 0; f < dim; ++f) x(t, f) = normal(rng);
    }
    values.push_back(std::move(x));
    labels.push_back(i % classes);
  }
  return TimeSeriesDataset::uniform(std::move(values), std::move(labels));
}

Series class_prototype(int class_id, int classes, int length, int dim) {
  const double centre = static_cast<double>(length) * (class_id + 1) / (classes + 1);
  const double width = static_cast<double>(length) / 10.0;
  Series proto(length, dim);
  for (int t = 0; t < length; ++t) {
    const double z = (t - centre) / width;
    const double bump = std::exp(-0.5 * z * z);
    for (int f = 0; f < dim; ++f) proto(t, f) = (1.0 + 0.1 * f) * bump;
  }
  return proto;
}

Series circular_shift(const Series& x, int shift) {
  const auto T = static_cast<int>(x.rows());
  Series out(x.rows(), x.cols());
  for (int t = 0; t < T; ++t) {
    const int src = ((t - shift) % T + T) % T;
    out.row(t) = x.row(src);
  }
  return out;
}

ShiftedPair gen_shifted_pair(int n, int length, int dim, int classes, const std::vector<int>& shifts,
                             double noise_sigma, std::uint64_t seed) {
  if (n < 1 || length < 1 || dim < 1 || classes < 1) throw InvalidInput("gen_shifted_pair: sizes must be positive");
  if (static_cast<int>(shifts.size()) != classes) throw InvalidInput("gen_shifted_pair: need one shift per class");
  for (int s : shifts) {
    if (2 * std::abs(s) >= length) {
      throw InvalidInput("gen_shifted_pair: shift " + std::to_string(s) + " is not below T/2");
    }
  }
  if (noise_sigma < 0.0) throw InvalidInput("gen_shifted_pair: noise sigma must be non-negative");

  std::vector<Series> protos;
  for (int c = 0; c < classes; ++c) protos.push_back(class_prototype(c, classes, length, dim));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noisy = [&](const Series& base) {
    Series x = base;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      for (Eigen::Index f = 0; f < x.cols(); ++f) x(t, f) += noise_sigma * normal(rng);
    }
    return x;
  };

  std::vector<Series> src, tgt;
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    labels.push_back(c);
    src.push_back(noisy(protos[c]));
  }
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    tgt.push_back(noisy(circular_shift(protos[c], shifts[c])));
  }
  return {TimeSeriesDataset::uniform(std::move(src), labels), TimeSeriesDataset::uniform(std::move(tgt), labels)};
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ParseError(where + ": cannot parse '" + text + "'");
  return value;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

void save_dataset(const TimeSeriesDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  const bool labelled = dataset.has_labels();
  out << "series_id" << (labelled ? ",label" : "") << ",t";
  for (Eigen::Index f = 0; f < dataset.dim(); ++f) out << ",f" << f;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Series& x = dataset.series[i];
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      out << i;
      if (labelled) out << ',' << (*dataset.labels)[i];
      out << ',' << t;
      for (Eigen::Index f = 0; f < x.cols(); ++f) out << ',' << format_double(x(t, f));
      out << '\n';
    }
  }
  if (!out) throw InvalidInput("failed writing " + path.string());
}

void save_weights(const TimeSeriesDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "series_id,weight\n";
  for (Eigen::Index i = 0; i < dataset.weights.size(); ++i) out << i << ',' << format_double(dataset.weights[i]) << '\n';
}

TimeSeriesDataset load_dataset(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& weights_path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(path.string() + ": empty file");
  const auto header = split_csv(line);
  std::size_t col = 0;
  if (header.size() <= col || header[col] != "series_id") throw ParseError(path.string() + ": first column must be series_id");
  ++col;
  const bool labelled = header.size() > col && header[col] == "label";
  if (labelled) ++col;
  if (header.size() <= col || header[col] != "t") throw ParseError(path.string() + ": missing t column");
  ++col;
  const std::size_t first_feature = col;
  for (; col < header.size(); ++col) {
    if (header[col] != "f" + std::to_string(col - first_feature)) {
      throw ParseError(path.string() + ": unknown column '" + header[col] + "'");
    }
  }
  const std::size_t q = header.size() - first_feature;
  if (q == 0) throw ParseError(path.string() + ": no feature columns");

  struct Raw {
    int label = -1;
    std::map<int, std::vector<double>> rows;
  };
  std::map<long long, Raw> raw;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields");
    const auto id = parse_number<long long>(fields[0], where);
    Raw& entry = raw[id];
    if (labelled) {
      const int y = parse_number<int>(fields[1], where);
      if (entry.label >= 0 && entry.label != y) throw ParseError(where + ": series has conflicting labels");
      entry.label = y;
    }
    const int t = parse_number<int>(fields[first_feature - 1], where);
    std::vector<double> values(q);
    for (std::size_t f = 0; f < q; ++f) values[f] = parse_number<double>(fields[first_feature + f], where);
    if (!entry.rows.emplace(t, std::move(values)).second) throw ParseError(where + ": duplicate timestamp");
  }
  if (raw.empty()) throw ParseError(path.string() + ": no data rows");

  std::vector<Series> series;
  std::vector<int> labels;
  std::map<long long, std::size_t> index_of;
  const std::size_t T = raw.begin()->second.rows.size();
  for (const auto& [id, entry] : raw) {
    if (entry.rows.size() != T) {
      throw ParseError(path.string() + ": series " + std::to_string(id) + " has " + std::to_string(entry.rows.size()) +
                       " timestamps, expected " + std::to_string(T) + " (inconsistent length)");
    }
    Series x(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(q));
    int expected = 0;
    for (const auto& [t, values] : entry.rows) {
      if (t != expected++) throw ParseError(path.string() + ": series " + std::to_string(id) + " has a gap at t = " + std::to_string(expected - 1));
      for (std::size_t f = 0; f < q; ++f) x(t, static_cast<Eigen::Index>(f)) = values[f];
    }
    index_of[id] = series.size();
    series.push_back(std::move(x));
    if (labelled) labels.push_back(entry.label);
  }

  Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(series.size()), 1.0 / static_cast<double>(series.size()));
  if (weights_path) {
    std::ifstream win = open_for_read(*weights_path);
    if (!next_line(win, line) || line != "series_id,weight") throw ParseError(weights_path->string() + ": header must be series_id,weight");
    std::vector<char> seen(series.size(), 0);
    std::size_t wline = 1;
    while (next_line(win, line)) {
      ++wline;
      if (line.empty()) continue;
      const std::string where = weights_path->string() + ":" + std::to_string(wline);
      const auto fields = split_csv(line);
      if (fields.size() != 2) throw ParseError(where + ": expected 2 fields");
      const auto it = index_of.find(parse_number<long long>(fields[0], where));
      if (it == index_of.end()) throw ParseError(where + ": unknown series id " + fields[0]);
      weights[static_cast<Eigen::Index>(it->second)] = parse_number<double>(fields[1], where);
      seen[it->second] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ParseError(weights_path->string() + ": missing weights for some series");
  }
  std::optional<std::vector<int>> maybe_labels;
  if (labelled) maybe_labels = std::move(labels);
  return {std::move(series), std::move(weights), std::move(maybe_labels)};
}

}  // namespace mad
