#include "dcml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dcml/rng.hpp"

namespace dcml {

std::vector<int> LabeledDataset::present_classes() const {
  std::set<int> seen(labels.begin(), labels.end());
  return {seen.begin(), seen.end()};
}

std::vector<std::vector<Eigen::Index>> LabeledDataset::indices_by_class() const {
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(class_count));
  for (Eigen::Index i = 0; i < size(); ++i) {
    by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  return by_class;
}

void LabeledDataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw std::invalid_argument("dataset: label count does not match feature rows");
  }
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (int c : labels) {
    if (c < 0 || c >= class_count) {
      throw std::invalid_argument("dataset: class_id " + std::to_string(c) +
                                  " outside [0, " + std::to_string(class_count) + ")");
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 1) {
      throw std::invalid_argument("dataset: class " + std::to_string(c) +
                                  " has a single sample; need at least 2 per present class");
    }
  }
}

void SyntheticSpec::validate() const {
  if (class_count < 1 || samples_per_class < 1 || feature_dim < 1 || mode_count_per_class < 1) {
    throw std::invalid_argument("synthetic spec: counts and dimensions must be positive");
  }
  if (intra_mode_sigma < 0.0 || inter_class_sigma < 0.0) {
    throw std::invalid_argument("synthetic spec: sigmas must be non-negative");
  }
}

SyntheticDataset generate_synthetic_with_modes(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int p = spec.feature_dim;

  auto gaussian_vec = [&](double sigma) {
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v[i] = sigma * normal(rng);
    return v;
  };

  const Eigen::Index n = static_cast<Eigen::Index>(spec.class_count) * spec.samples_per_class;
  SyntheticDataset out;
  out.data.features.resize(n, p);
  out.data.labels.resize(static_cast<std::size_t>(n));
  out.data.class_count = spec.class_count;
  out.mode_labels.resize(static_cast<std::size_t>(n));

  Eigen::Index row = 0;
  for (int c = 0; c < spec.class_count; ++c) {
    const Eigen::VectorXd center = gaussian_vec(spec.inter_class_sigma);
    std::vector<Eigen::VectorXd> modes;
    modes.reserve(static_cast<std::size_t>(spec.mode_count_per_class));
    for (int m = 0; m < spec.mode_count_per_class; ++m) {
      modes.push_back(center + gaussian_vec(spec.inter_class_sigma));
    }
    for (int s = 0; s < spec.samples_per_class; ++s) {
      const int m = s % spec.mode_count_per_class;  // round-robin keeps modes even
      out.data.features.row(row) = modes[static_cast<std::size_t>(m)] + gaussian_vec(spec.intra_mode_sigma);
      out.data.labels[static_cast<std::size_t>(row)] = c;
      out.mode_labels[static_cast<std::size_t>(row)] = m;
      ++row;
    }
  }
  return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_with_modes(spec).data;
}

namespace {

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(tok, &used);
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

LabeledDataset load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  int dim = -1;
  int max_label = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);

    double first = 0.0;
    if (line_no == 1 && (toks.empty() || !parse_double(toks[0], first))) {
      continue;  // header row
    }
    if (toks.size() < 2) {
      throw std::runtime_error("feature file " + path + ": malformed row at line " +
                               std::to_string(line_no) + " (need class_id plus features)");
    }
    if (!parse_double(toks[0], first) || first != std::floor(first) || first < 0) {
      throw std::runtime_error("feature file " + path + ": bad class_id at line " +
                               std::to_string(line_no));
    }
    std::vector<double> feats;
    feats.reserve(toks.size() - 1);
    for (std::size_t i = 1; i < toks.size(); ++i) {
      double v = 0.0;
      if (!parse_double(toks[i], v)) {
        throw std::runtime_error("feature file " + path + ": bad value at line " +
                                 std::to_string(line_no) + ", column " + std::to_string(i + 1));
      }
      feats.push_back(v);
    }
    if (dim < 0) {
      dim = static_cast<int>(feats.size());
    } else if (static_cast<int>(feats.size()) != dim) {
      throw std::runtime_error("feature file " + path + ": dimension mismatch at line " +
                               std::to_string(line_no) + " (got " + std::to_string(feats.size()) +
                               ", expected " + std::to_string(dim) + ")");
    }
    labels.push_back(static_cast<int>(first));
    max_label = std::max(max_label, static_cast<int>(first));
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw std::runtime_error("feature file " + path + ": no data rows");

  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < dim; ++c) out.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  out.labels = std::move(labels);
  out.class_count = max_label + 1;
  return out;
}

void save_features(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  char buf[32];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

SplitResult zero_shot_split(const LabeledDataset& data, double train_fraction,
                            std::int64_t permute_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("zero_shot_split: train_fraction must be in (0, 1)");
  }
  std::vector<int> classes = data.present_classes();
  if (classes.size() < 2) {
    throw std::invalid_argument("zero_shot_split: need at least 2 classes");
  }
  if (permute_seed >= 0) {
    Rng rng = make_rng(static_cast<std::uint64_t>(permute_seed), 7);
    shuffle_in_place(classes, rng);
  }
  const auto n_train = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(classes.size())));
  std::vector<bool> in_train(static_cast<std::size_t>(data.class_count), false);
  for (std::size_t i = 0; i < n_train && i < classes.size(); ++i) {
    in_train[static_cast<std::size_t>(classes[i])] = true;
  }

  SplitResult out;
  std::vector<Eigen::Index> tr, te;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    (in_train[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])] ? tr : te).push_back(i);
  }
  auto take = [&](const std::vector<Eigen::Index>& idx) {
    LabeledDataset d;
    d.features.resize(static_cast<Eigen::Index>(idx.size()), data.features.cols());
    d.labels.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      d.features.row(static_cast<Eigen::Index>(r)) = data.features.row(idx[r]);
      d.labels.push_back(data.labels[static_cast<std::size_t>(idx[r])]);
    }
    d.class_count = data.class_count;
    return d;
  };
  out.train = take(tr);
  out.test = take(te);
  return out;
}

}  // namespace dcml
