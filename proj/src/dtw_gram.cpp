#include <kdict/dtw_gram.hpp>
#include <kdict/error.hpp>
#include <kdict/io.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace kdict {

double dtw_distance(const TimeSeries& a, const TimeSeries& b)
{
   if (a.channels() != b.channels()) {
      throw ConfigError("dtw: channel mismatch (" + std::to_string(a.channels()) +
                        " vs " + std::to_string(b.channels()) + ")");
   }
   const Eigen::Index n = a.length();
   const Eigen::Index m = b.length();
   if (n == 0 || m == 0) {
      throw ConfigError("dtw: empty series");
   }
   constexpr double inf = std::numeric_limits<double>::infinity();

   // two rolling rows over b
   std::vector<double> prev(static_cast<std::size_t>(m), inf);
   std::vector<double> curr(static_cast<std::size_t>(m), inf);
   for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
         const double cost = (a.frames.row(i) - b.frames.row(j)).squaredNorm();
         double best;
         if (i == 0 && j == 0) {
            best = 0.0;
         } else {
            best = inf;
            if (i > 0) {
               best = std::min(best, prev[static_cast<std::size_t>(j)]);
            }
            if (j > 0) {
               best = std::min(best, curr[static_cast<std::size_t>(j - 1)]);
            }
            if (i > 0 && j > 0) {
               best = std::min(best, prev[static_cast<std::size_t>(j - 1)]);
            }
         }
         curr[static_cast<std::size_t>(j)] = cost + best;
      }
      std::swap(prev, curr);
   }
   return std::sqrt(prev[static_cast<std::size_t>(m - 1)]);
}

DistanceMatrix distance_matrix(const std::vector<TimeSeries>& series)
{
   const auto n = static_cast<Eigen::Index>(series.size());
   DistanceMatrix d{Eigen::MatrixXd::Zero(n, n)};
   for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
         const double v = dtw_distance(series[static_cast<std::size_t>(i)],
                                       series[static_cast<std::size_t>(j)]);
         d.values(i, j) = v;
         d.values(j, i) = v;
      }
   }
   return d;
}

Eigen::MatrixXd cross_distances(const std::vector<TimeSeries>& queries,
                                const std::vector<TimeSeries>& reference)
{
   Eigen::MatrixXd d(static_cast<Eigen::Index>(queries.size()),
                     static_cast<Eigen::Index>(reference.size()));
   for (std::size_t i = 0; i < queries.size(); ++i) {
      for (std::size_t j = 0; j < reference.size(); ++j) {
         d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            dtw_distance(queries[i], reference[j]);
      }
   }
   return d;
}

double default_sigma(const DistanceMatrix& d)
{
   const Eigen::Index n = d.values.rows();
   if (n < 2) {
      return 1.0;
   }
   double sum = 0.0;
   for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
         if (i != j) {
            sum += d.values(i, j) * d.values(i, j);
         }
      }
   }
   const double mean = sum / static_cast<double>(n * (n - 1));
   return mean > 0.0 ? mean : 1.0;
}

double nearest_neighbor_sigma(const DistanceMatrix& d)
{
   const Eigen::Index n = d.values.rows();
   if (n < 2) {
      return 1.0;
   }
   double sum = 0.0;
   for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
         if (i != j) {
            best = std::min(best, d.values(i, j) * d.values(i, j));
         }
      }
      sum += best;
   }
   const double mean = sum / static_cast<double>(n);
   return mean > 0.0 ? mean : 1.0;
}

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& distances, double sigma)
{
   if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("kernel bandwidth sigma must be positive");
   }
   return (-distances.array().square() / sigma).exp().matrix();
}

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& k)
{
   if (k.rows() != k.cols()) {
      throw ConfigError("psd_clip: matrix is not square");
   }
   if (!k.allFinite()) {
      throw Error("psd_clip: non-finite input");
   }
   if (k.size() == 0) {
      return k;
   }
   const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
   if (eig.info() != Eigen::Success) {
      throw Error("psd_clip: eigensolver failed");
   }
   const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
   const Eigen::MatrixXd& v = eig.eigenvectors();
   Eigen::MatrixXd out = v * lambda.asDiagonal() * v.transpose();
   return 0.5 * (out + out.transpose());
}

GramMatrix gram_from_distances(const DistanceMatrix& d, std::optional<double> sigma)
{
   if (d.values.rows() < 2) {
      throw ConfigError("a Gram matrix needs at least 2 series");
   }
   const double s = sigma ? *sigma : default_sigma(d);
   GramMatrix g;
   g.sigma = s;
   g.values = psd_clip(gaussian_kernel(d.values, s));
   return g;
}

GramBuild build_gram(const LabeledDataset& ds, std::optional<double> sigma)
{
   GramBuild out;
   out.distances = distance_matrix(ds.series);
   out.gram = gram_from_distances(out.distances, sigma);
   return out;
}

Eigen::MatrixXd cross_kernel(const std::vector<TimeSeries>& queries,
                             const std::vector<TimeSeries>& reference, double sigma)
{
   return gaussian_kernel(cross_distances(queries, reference), sigma);
}

Eigen::MatrixXd cross_kernel(const std::vector<TimeSeries>& queries,
                             const LabeledDataset& ds, double sigma)
{
   return cross_kernel(queries, ds.series, sigma);
}

double min_eigenvalue(const Eigen::MatrixXd& k)
{
   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
   return eig.eigenvalues().minCoeff();
}

std::string matrix_to_csv(const Eigen::MatrixXd& m)
{
   std::string out;
   for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
         if (j > 0) {
            out += ',';
         }
         out += format_double(m(i, j));
      }
      out += '\n';
   }
   return out;
}

Eigen::MatrixXd read_matrix_csv(const std::string& text)
{
   std::vector<std::vector<double>> rows;
   std::istringstream in(text);
   std::string line;
   while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') {
         continue;
      }
      std::vector<double> row;
      std::size_t start = 0;
      while (start <= line.size()) {
         auto end = line.find(',', start);
         if (end == std::string::npos) {
            end = line.size();
         }
         double v = 0.0;
         const auto res = std::from_chars(line.data() + start, line.data() + end, v);
         if (res.ec != std::errc()) {
            throw ConfigError("bad number in matrix CSV");
         }
         row.push_back(v);
         start = end + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
         throw ConfigError("ragged matrix CSV");
      }
      rows.push_back(std::move(row));
   }
   Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                     rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
   for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
         m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
   }
   return m;
}

namespace {

std::string cache_header(std::uint64_t hash, Eigen::Index n)
{
   return "# kdict-distance-cache v1 hash=" + hash_hex(hash) +
          " n=" + std::to_string(n);
}

} // namespace

std::filesystem::path distance_cache_path(const std::filesystem::path& dir,
                                          std::uint64_t hash)
{
   return dir / ("dtw_" + hash_hex(hash) + ".csv");
}

std::optional<DistanceMatrix> load_distance_cache(const std::filesystem::path& file,
                                                  std::uint64_t hash)
{
   if (!std::filesystem::exists(file)) {
      return std::nullopt;
   }
   const auto text = read_text(file);
   const auto eol = text.find('\n');
   const auto header = text.substr(0, eol);
   DistanceMatrix d{read_matrix_csv(text)};
   if (header != cache_header(hash, d.values.rows()) ||
       d.values.rows() != d.values.cols()) {
      return std::nullopt;
   }
   return d;
}

void save_distance_cache(const std::filesystem::path& file, std::uint64_t hash,
                         const DistanceMatrix& d)
{
   write_text_atomic(file, cache_header(hash, d.values.rows()) + "\n" +
                              matrix_to_csv(d.values));
}

DistanceMatrix cached_distance_matrix(const LabeledDataset& ds,
                                      const std::filesystem::path& cache_dir)
{
   if (cache_dir.empty()) {
      return distance_matrix(ds.series);
   }
   const auto hash = content_hash(ds);
   const auto file = distance_cache_path(cache_dir, hash);
   if (auto cached = load_distance_cache(file, hash)) {
      return *cached;
   }
   auto d = distance_matrix(ds.series);
   save_distance_cache(file, hash, d);
   return d;
}

} // namespace kdict
