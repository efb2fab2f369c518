#include "xmodal/synthdata.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "xmodal/io.hpp"

namespace xmodal {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;

void validate_pairs(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
    std::uint32_t num_classes, const char* field) {
  std::set<std::uint32_t> seen;
  for (auto [x, y] : pairs) {
    if (x >= num_classes || y >= num_classes)
      throw ValidationError(std::string(field) + ": class index out of range");
    if (x == y)
      throw ValidationError(std::string(field) + ": pair repeats a class");
    if (!seen.insert(x).second || !seen.insert(y).second)
      throw ValidationError(std::string(field) +
                            ": pairs must be disjoint within a modality");
  }
}

std::pair<std::uint32_t, std::uint32_t> canonical(
    std::pair<std::uint32_t, std::uint32_t> p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

Matrix random_unit_rows(std::size_t rows, std::size_t cols,
                        RandomStream& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
  return l2_normalize_rows(m);
}

}  // namespace

void DatasetSpec::validate() const {
  if (num_classes < 2) throw ValidationError("num_classes: must be >= 2");
  if (instances_per_class < 1)
    throw ValidationError("instances_per_class: must be >= 1");
  if (dim_a < 1) throw ValidationError("dim_a: must be >= 1");
  if (dim_b < 1) throw ValidationError("dim_b: must be >= 1");
  if (!(noise_sigma > 0.0)) throw ValidationError("noise_sigma: must be > 0");
  if (!(instance_sigma > 0.0))
    throw ValidationError("instance_sigma: must be > 0");
  validate_pairs(confound_pairs_a, num_classes, "confound_pairs_a");
  validate_pairs(confound_pairs_b, num_classes, "confound_pairs_b");
  std::set<std::pair<std::uint32_t, std::uint32_t>> in_a;
  for (auto p : confound_pairs_a) in_a.insert(canonical(p));
  for (auto p : confound_pairs_b)
    if (in_a.count(canonical(p)))
      throw ValidationError(
          "confound_pairs_b: pair also confounded in modality A, agreement "
          "could not disambiguate it");
}

DatasetSpec default_dataset_spec(std::uint64_t seed) {
  DatasetSpec spec;
  spec.confound_pairs_a = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  spec.confound_pairs_b = {{8, 9}, {10, 11}, {12, 13}, {14, 15}};
  spec.seed = seed;
  return spec;
}

Dataset::Dataset(std::uint32_t num_classes, std::vector<Instance> instances,
                 Matrix anchors_a, Matrix anchors_b)
    : num_classes_(num_classes),
      instances_(std::move(instances)),
      anchors_a_(std::move(anchors_a)),
      anchors_b_(std::move(anchors_b)) {
  if (anchors_a_.rows() != instances_.size() ||
      anchors_b_.rows() != instances_.size())
    throw ValidationError("dataset: anchor row count must equal instance count");
}

std::vector<std::uint32_t> Dataset::labels() const {
  std::vector<std::uint32_t> out;
  out.reserve(instances_.size());
  for (const Instance& ins : instances_) out.push_back(ins.label);
  return out;
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  RandomStream mean_rng(derive_seed(spec.seed, 0x6d65616e));    // class means
  RandomStream spread_rng(derive_seed(spec.seed, 0x73707264));  // anchors

  Matrix means_a = random_unit_rows(spec.num_classes, spec.dim_a, mean_rng);
  Matrix means_b = random_unit_rows(spec.num_classes, spec.dim_b, mean_rng);
  for (auto [keep, alias] : spec.confound_pairs_a)
    for (std::uint32_t j = 0; j < spec.dim_a; ++j)
      means_a(alias, j) = means_a(keep, j);
  for (auto [keep, alias] : spec.confound_pairs_b)
    for (std::uint32_t j = 0; j < spec.dim_b; ++j)
      means_b(alias, j) = means_b(keep, j);

  const std::size_t n =
      std::size_t(spec.num_classes) * spec.instances_per_class;
  std::vector<Instance> instances(n);
  Matrix anchors_a(n, spec.dim_a);
  Matrix anchors_b(n, spec.dim_b);
  std::size_t idx = 0;
  for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
    for (std::uint32_t k = 0; k < spec.instances_per_class; ++k, ++idx) {
      instances[idx].id = idx;
      instances[idx].label = c;
      for (std::uint32_t j = 0; j < spec.dim_a; ++j)
        anchors_a(idx, j) =
            means_a(c, j) + spec.instance_sigma * spread_rng.gaussian();
      for (std::uint32_t j = 0; j < spec.dim_b; ++j)
        anchors_b(idx, j) =
            means_b(c, j) + spec.instance_sigma * spread_rng.gaussian();
    }
  }
  return Dataset(spec.num_classes, std::move(instances), std::move(anchors_a),
                 std::move(anchors_b));
}

std::pair<std::vector<double>, std::vector<double>> sample_view(
    const Dataset& ds, std::size_t i, double noise_sigma, RandomStream& rng) {
  if (i >= ds.size())
    throw ValidationError("sample_view: instance " + std::to_string(i) +
                          " out of range");
  auto ra = ds.anchors_a().row(i);
  auto rb = ds.anchors_b().row(i);
  std::vector<double> va(ra.begin(), ra.end());
  std::vector<double> vb(rb.begin(), rb.end());
  for (double& v : va) v += noise_sigma * rng.gaussian();
  for (double& v : vb) v += noise_sigma * rng.gaussian();
  return {std::move(va), std::move(vb)};
}

void sample_view_into(const Dataset& ds, std::size_t i, double noise_sigma,
                      RandomStream& rng, Matrix& views_a, Matrix& views_b,
                      std::size_t out_row) {
  auto ra = ds.anchors_a().row(i);
  auto rb = ds.anchors_b().row(i);
  auto oa = views_a.row(out_row);
  auto ob = views_b.row(out_row);
  for (std::size_t j = 0; j < ra.size(); ++j)
    oa[j] = ra[j] + noise_sigma * rng.gaussian();
  for (std::size_t j = 0; j < rb.size(); ++j)
    ob[j] = rb[j] + noise_sigma * rng.gaussian();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("XMDS");
  w.u32(kDatasetVersion);
  w.u64(ds.size());
  w.u32(ds.num_classes());
  w.u32(ds.dim_a());
  w.u32(ds.dim_b());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w.u64(ds.instance(i).id);
    w.u32(ds.instance(i).label);
    w.f64_array(ds.anchors_a().row(i));
    w.f64_array(ds.anchors_b().row(i));
  }
  w.close();
}

Dataset load_dataset(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic("XMDS");
  r.version(kDatasetVersion, "dataset");
  std::uint64_t n = r.u64();
  std::uint32_t num_classes = r.u32();
  std::uint32_t dim_a = r.u32();
  std::uint32_t dim_b = r.u32();
  std::vector<Instance> instances(n);
  Matrix anchors_a(n, dim_a);
  Matrix anchors_b(n, dim_b);
  for (std::uint64_t i = 0; i < n; ++i) {
    instances[i].id = r.u64();
    instances[i].label = r.u32();
    r.f64_array(anchors_a.row(i));
    r.f64_array(anchors_b.row(i));
  }
  r.expect_eof();
  return Dataset(num_classes, std::move(instances), std::move(anchors_a),
                 std::move(anchors_b));
}

}  // namespace xmodal
