#include "hdm/io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hdm/error.hpp"
#include "hdm/knn.hpp"
#include "hdm/localpca.hpp"

namespace hdm {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidArgument, "manifest: " + what); }

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

double as_real(const json& v, const char* what) {
  if (!v.is_number()) bad(std::string(what) + " must be a number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const char* what) {
  if (!v.is_number_integer()) bad(std::string(what) + " must be an integer");
  return v.get<std::int64_t>();
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::ostream& real(std::ostream& os, double x) {
  return os << std::setprecision(17) << x;
}

}  // namespace

DatasetManifest manifest_from_sample(const FibreBundleSample& sample) {
  DatasetManifest m;
  m.sample = sample;
  m.ids.resize(sample.fibre_count());
  for (std::size_t j = 0; j < m.ids.size(); ++j) m.ids[j] = static_cast<std::int64_t>(j);
  return m;
}

std::string write_manifest(const DatasetManifest& m) {
  json doc;
  doc["format_version"] = m.format_version;
  json fibres = json::array();
  for (std::size_t j = 0; j < m.sample.fibre_count(); ++j) {
    const Fibre& f = m.sample.fibres[j];
    json fj;
    fj["id"] = m.ids.at(j);
    if (f.base.size() > 0) fj["base"] = vector_json(f.base);
    json pts = json::array();
    for (Eigen::Index r = 0; r < f.points.rows(); ++r) pts.push_back(vector_json(f.points.row(r).transpose()));
    fj["points"] = std::move(pts);
    fibres.push_back(std::move(fj));
  }
  doc["fibres"] = std::move(fibres);
  json blocks = json::array();
  for (const auto& b : m.blocks) {
    json bj;
    bj["i"] = m.ids.at(b.i);
    bj["j"] = m.ids.at(b.j);
    if (b.base_distance) bj["base_distance"] = *b.base_distance;
    json trips = json::array();
    for (int c = 0; c < b.rho.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(b.rho, c); it; ++it)
        trips.push_back(json::array({it.row(), it.col(), it.value()}));
    bj["triplets"] = std::move(trips);
    blocks.push_back(std::move(bj));
  }
  doc["blocks"] = std::move(blocks);
  if (m.edges) {
    json edges = json::array();
    for (const auto& [a, b] : *m.edges) edges.push_back(json::array({m.ids.at(a), m.ids.at(b)}));
    doc["edges"] = std::move(edges);
  }
  return doc.dump(1) + "\n";
}

DatasetManifest parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) bad("top level must be an object");
  DatasetManifest m;
  m.format_version = static_cast<int>(as_int(field(doc, "format_version"), "format_version"));
  if (m.format_version != kManifestVersion) bad("unsupported format_version " + std::to_string(m.format_version));

  const json& fibres = field(doc, "fibres");
  if (!fibres.is_array() || fibres.empty()) throw Error(ErrorCode::EmptyInput, "manifest: no fibres");
  std::map<std::int64_t, std::uint32_t> position;
  for (const json& fj : fibres) {
    const std::int64_t id = as_int(field(fj, "id"), "fibre id");
    if (!position.emplace(id, static_cast<std::uint32_t>(m.ids.size())).second)
      bad("duplicate fibre id " + std::to_string(id));
    m.ids.push_back(id);
    Fibre f;
    if (fj.contains("base")) {
      const json& base = fj["base"];
      if (!base.is_array()) bad("fibre base must be an array");
      f.base.resize(static_cast<Eigen::Index>(base.size()));
      for (std::size_t c = 0; c < base.size(); ++c) f.base[static_cast<Eigen::Index>(c)] = as_real(base[c], "base coordinate");
    }
    const json& pts = field(fj, "points");
    if (!pts.is_array() || pts.empty()) throw Error(ErrorCode::EmptyInput, "manifest: fibre " + std::to_string(id) + " has no points");
    const std::size_t dim = pts[0].is_array() ? pts[0].size() : 0;
    if (dim == 0) bad("fibre points must be nonempty coordinate rows");
    f.points.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < pts.size(); ++r) {
      if (!pts[r].is_array() || pts[r].size() != dim)
        throw Error(ErrorCode::SizeMismatch, "manifest: ragged point rows in fibre " + std::to_string(id));
      for (std::size_t c = 0; c < dim; ++c)
        f.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_real(pts[r][c], "point coordinate");
    }
    m.sample.fibres.push_back(std::move(f));
  }
  auto lookup = [&](const json& v) {
    auto it = position.find(as_int(v, "fibre reference"));
    if (it == position.end()) throw Error(ErrorCode::IndexOutOfRange, "manifest: unknown fibre id " + v.dump());
    return it->second;
  };

  if (doc.contains("blocks")) {
    const json& blocks = doc["blocks"];
    if (!blocks.is_array()) bad("blocks must be an array");
    for (const json& bj : blocks) {
      CorrespondenceBlock b;
      b.i = lookup(field(bj, "i"));
      b.j = lookup(field(bj, "j"));
      if (bj.contains("base_distance")) b.base_distance = as_real(bj["base_distance"], "base_distance");
      const auto rows = m.sample.fibres[b.i].points.rows();
      const auto cols = m.sample.fibres[b.j].points.rows();
      std::vector<Eigen::Triplet<double>> trips;
      const json& tj = field(bj, "triplets");
      if (!tj.is_array()) bad("triplets must be an array");
      for (const json& t : tj) {
        if (!t.is_array() || t.size() != 3) bad("each triplet must be [r, s, w]");
        const auto r = as_int(t[0], "triplet row");
        const auto s = as_int(t[1], "triplet column");
        if (r < 0 || r >= rows || s < 0 || s >= cols)
          throw Error(ErrorCode::IndexOutOfRange, "manifest: triplet outside its block");
        trips.emplace_back(static_cast<int>(r), static_cast<int>(s), as_real(t[2], "triplet weight"));
      }
      b.rho.resize(rows, cols);
      b.rho.setFromTriplets(trips.begin(), trips.end());
      if (static_cast<std::size_t>(b.rho.nonZeros()) != trips.size()) bad("duplicate triplet in a block");
      m.blocks.push_back(std::move(b));
    }
  }
  // Blocks given in both orientations must be transposes of each other.
  std::map<BaseEdge, const CorrespondenceBlock*> seen;
  for (const auto& b : m.blocks) {
    if (b.i == b.j) bad("diagonal correspondence block");
    if (!seen.emplace(BaseEdge{b.i, b.j}, &b).second) bad("duplicate correspondence block");
    auto rev = seen.find(BaseEdge{b.j, b.i});
    if (rev != seen.end()) {
      const Eigen::MatrixXd diff = Eigen::MatrixXd(b.rho) - Eigen::MatrixXd(rev->second->rho).transpose();
      if (diff.size() > 0 && diff.cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorCode::AsymmetricBlocks, "manifest: block pair is not transpose-symmetric");
    }
  }
  if (doc.contains("edges")) {
    const json& ej = doc["edges"];
    if (!ej.is_array()) bad("edges must be an array");
    std::vector<BaseEdge> edges;
    for (const json& e : ej) {
      if (!e.is_array() || e.size() != 2) bad("each edge must be [i, j]");
      edges.emplace_back(lookup(e[0]), lookup(e[1]));
    }
    m.edges = std::move(edges);
  }
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

DatasetManifest load_manifest(const std::string& path) { return parse_manifest(read_text_file(path)); }

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  write_text_file(path, write_manifest(manifest));
}

bool manifests_equal(const DatasetManifest& a, const DatasetManifest& b) {
  if (a.format_version != b.format_version || a.ids != b.ids) return false;
  if (a.sample.fibre_count() != b.sample.fibre_count() || a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t j = 0; j < a.sample.fibre_count(); ++j) {
    const Fibre& fa = a.sample.fibres[j];
    const Fibre& fb = b.sample.fibres[j];
    if (fa.base.size() != fb.base.size() || fa.base != fb.base) return false;
    if (fa.points.rows() != fb.points.rows() || fa.points.cols() != fb.points.cols() || fa.points != fb.points) return false;
  }
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    const auto& x = a.blocks[k];
    const auto& y = b.blocks[k];
    if (x.i != y.i || x.j != y.j || x.base_distance != y.base_distance) return false;
    if (x.rho.rows() != y.rho.rows() || x.rho.cols() != y.rho.cols() || x.rho.nonZeros() != y.rho.nonZeros()) return false;
    if (Eigen::MatrixXd(x.rho) != Eigen::MatrixXd(y.rho)) return false;
  }
  return a.edges == b.edges;
}

Eigen::MatrixXd base_distance_matrix(const FibreBundleSample& sample) {
  const std::size_t n = sample.fibre_count();
  for (const auto& f : sample.fibres)
    if (f.base.size() == 0 || f.base.size() != sample.fibres[0].base.size()) return {};
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (sample.fibres[i].base - sample.fibres[j].base).norm();
  return d;
}

HorizontalDiffusionMatrix build_from_manifest(const DatasetManifest& m, const BuildOptions& opt) {
  opt.kernel.validate();
  if (!m.blocks.empty()) {
    std::vector<CorrespondenceBlock> blocks;
    if (m.edges) {
      std::set<BaseEdge> allowed;
      for (auto [a, b] : *m.edges) {
        allowed.insert({a, b});
        allowed.insert({b, a});
      }
      for (const auto& b : m.blocks)
        if (allowed.count({b.i, b.j})) blocks.push_back(b);
    } else {
      blocks = m.blocks;
    }
    const bool all_have_distance =
        std::all_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.base_distance.has_value(); });
    Eigen::MatrixXd dists;
    if (!all_have_distance) {
      dists = base_distance_matrix(m.sample);
      if (dists.size() == 0)
        throw Error(ErrorCode::InvalidArgument, "blocks without base_distance need base coordinates on every fibre");
    }
    std::vector<std::size_t> sizes;
    for (const auto& f : m.sample.fibres) sizes.push_back(static_cast<std::size_t>(f.points.rows()));
    return build_w_from_blocks(sizes, blocks, dists, opt.k_base, opt.kernel.eps);
  }

  if (opt.mode == SamplingMode::Noiseless) return build_w_noiseless(m.sample, opt.k_base, opt.k_fibre, opt.kernel);

  EmpiricalFibreSample emp;
  emp.sample = m.sample;
  const PointMatrix bases = m.sample.base_points();
  LocalPcaOptions pca;
  pca.k = opt.k_pca;
  pca.eps_pca = opt.eps_pca;
  pca.kernel = opt.pca_kernel;
  pca.dim = static_cast<int>(m.sample.fibres[0].points.cols()) - 1;
  emp.bases = local_pca_bases(bases, pca);
  for (std::size_t j = 0; j < m.sample.fibre_count(); ++j) {
    PointMatrix c = m.sample.fibres[j].points * emp.bases[j].basis;
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      const double n = c.row(r).norm();
      if (!(n > 1e-12)) throw Error(ErrorCode::DegenerateOverlap, "fibre point orthogonal to its estimated tangent plane");
      c.row(r) /= n;
    }
    emp.coefficients.push_back(std::move(c));
  }
  NeighborIndex index(bases);
  const auto edges = mutual_knn_edges(index, opt.k_base);
  const auto transports = estimate_transports(emp.bases, edges);
  return build_w_empirical(emp, transports, opt.k_base, opt.k_fibre, opt.kernel);
}

void write_eigs_csv(std::ostream& os, const SpectralDecomposition& d) {
  os << "index,eigenvalue,residual\n";
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
    os << i << ',';
    real(os, d.eigenvalues[i]) << ',';
    real(os, i < d.residuals.size() ? d.residuals[i] : 0.0) << '\n';
  }
}

void write_embedding_csv(std::ostream& os, const HdmCoordinates& coords) {
  os << "fibre,point";
  for (Eigen::Index c = 0; c < coords.coords.cols(); ++c) os << ",h" << c + 1;
  os << '\n';
  for (std::size_t j = 0; j < coords.layout.fibre_count(); ++j) {
    for (std::size_t s = 0; s < coords.layout.sizes[j]; ++s) {
      const auto row = static_cast<Eigen::Index>(coords.layout.offsets[j] + s);
      os << j << ',' << s;
      for (Eigen::Index c = 0; c < coords.coords.cols(); ++c) real(os << ',', coords.coords(row, c));
      os << '\n';
    }
  }
}

void write_features_csv(std::ostream& os, const HbdmFeatures& f) {
  os << "fibre";
  for (Eigen::Index l = 0; l < f.k; ++l)
    for (Eigen::Index m = 0; m < f.k; ++m) os << ",v" << l << '_' << m;
  os << '\n';
  for (Eigen::Index j = 0; j < f.features.rows(); ++j) {
    os << j;
    for (Eigen::Index c = 0; c < f.features.cols(); ++c) real(os << ',', f.features(j, c));
    os << '\n';
  }
}

void write_segmentation_csv(std::ostream& os, const Segmentation& seg) {
  os << "fibre,point,label\n";
  for (std::size_t j = 0; j < seg.layout.fibre_count(); ++j)
    for (std::size_t s = 0; s < seg.layout.sizes[j]; ++s)
      os << j << ',' << s << ',' << seg.labels[seg.layout.offsets[j] + s] << '\n';
}

void write_eigs_plot(std::ostream& os, const std::vector<double>& eigenvalues) {
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) real(os << i << ' ', eigenvalues[i]) << '\n';
}

std::string report_json(const MultiplicityReport& r) {
  const So3Config& c = r.config;
  json doc;
  doc["config"] = {
      {"mode", c.mode == SamplingMode::Noiseless ? "noiseless" : "empirical"},
      {"n_base", c.n_base}, {"n_fibre", c.n_fibre}, {"k_base", c.k_base}, {"k_fibre", c.k_fibre},
      {"eps", c.eps}, {"delta", c.delta}, {"alpha", c.alpha}, {"n_eigs", c.n_eigs},
      {"group_tol", c.group_tol}, {"seed", c.seed}, {"eps_pca", c.eps_pca}, {"k_pca", c.k_pca},
  };
  doc["eigenvalues"] = r.eigenvalues;
  doc["residuals"] = r.residuals;
  json groups = json::array();
  std::vector<std::size_t> sizes;
  for (const auto& g : r.groups) {
    groups.push_back({{"first", g.first}, {"size", g.size}, {"mean", g.mean}});
    sizes.push_back(g.size);
  }
  doc["groups"] = std::move(groups);
  doc["group_sizes"] = sizes;
  doc["ratios"] = r.ratios;
  doc["regime"] = std::string(to_string(r.regime));
  doc["theta_star"] = r.theta_star;
  doc["variance_scale"] = r.variance_scale;
  doc["kappa"] = r.kappa;
  doc["nonzeros"] = r.nonzeros;
  return doc.dump(2) + "\n";
}

}  // namespace hdm
