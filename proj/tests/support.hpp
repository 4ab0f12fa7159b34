#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "topicflow/rng.hpp"

namespace topicflow::test {

inline std::filesystem::path data_dir()
{
    return std::filesystem::path(TOPICFLOW_DATA_DIR);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(std::string_view tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("topicflow_" + std::string(tag) + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// `n` points drawn around `center` with isotropic spread `sigma`.
inline Eigen::MatrixXd gaussian_blob(Rng& rng, const Eigen::RowVectorXd& center, double sigma, int n)
{
    Eigen::MatrixXd out(n, center.size());
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < center.size(); ++j) {
            out(i, j) = center(j) + sigma * rng.normal();
        }
    }
    return out;
}

inline Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

}  // namespace topicflow::test
