#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osg/grid.hpp"
#include "osg/pipeline.hpp"
#include "osg/slepian.hpp"
#include "osg/synthetic.hpp"

namespace osg {

inline constexpr int kFormatVersion = 1;

// One named payload: little-endian IEEE-754 doubles, row-major, no header.
struct StoredArray {
    std::string name;
    std::vector<long long> shape;
    std::vector<double> data;

    long long element_count() const;
};

// A directory holding a JSON manifest plus one raw .f64 file per array.
class ArrayContainer {
  public:
    std::string kind;
    std::uint64_t fingerprint = 0;
    std::vector<std::pair<std::string, std::string>> meta;  // ordered key/value

    void add(std::string name, std::vector<long long> shape, std::vector<double> data);
    void add_matrix(const std::string& name, const Eigen::MatrixXd& m);  // row-major
    void add_vector(const std::string& name, const Eigen::VectorXd& v);

    bool has(const std::string& name) const;
    const StoredArray& array(const std::string& name) const;
    Eigen::MatrixXd matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;

    void set_meta(const std::string& key, const std::string& value);
    void set_meta(const std::string& key, long long value);
    void set_meta(const std::string& key, double value);
    std::string meta_string(const std::string& key) const;
    long long meta_int(const std::string& key) const;
    double meta_double(const std::string& key) const;

    void write(const std::filesystem::path& dir) const;
    static ArrayContainer read(const std::filesystem::path& dir);

  private:
    std::vector<StoredArray> arrays_;
};

// Grid, block, basis and model-state containers.
void write_grid(const std::filesystem::path& dir, const RegionGrid& grid);
RegionGrid read_grid(const std::filesystem::path& dir);

void write_block(const std::filesystem::path& dir, const EnsembleBlock& block);
EnsembleBlock read_block(const std::filesystem::path& dir);

struct BasisBundle {
    SlepianBasis basis;
    RegionGrid grid;
    Eigen::VectorXd full_spectrum;  // all Q^2 eigenvalues
};

void write_basis(const std::filesystem::path& dir, const BasisBundle& bundle);
BasisBundle read_basis(const std::filesystem::path& dir);

struct StateBundle {
    OsgModel model;
    RegionGrid grid;
};

void save_state(const std::filesystem::path& dir, const StateBundle& bundle);
StateBundle load_state(const std::filesystem::path& dir);

void write_truth(const std::filesystem::path& dir, const SyntheticTruth& truth,
                 const RegionGrid& grid);
SyntheticTruth read_truth(const std::filesystem::path& dir, RegionGrid* grid_out = nullptr);

// Exclusive writer lock on a state directory; throws a sequencing error when
// the lock is already held. Released on destruction.
class StateLock {
  public:
    explicit StateLock(const std::filesystem::path& dir);
    ~StateLock();
    StateLock(const StateLock&) = delete;
    StateLock& operator=(const StateLock&) = delete;

  private:
    std::filesystem::path path_;
    bool held_ = false;
};

}  // namespace osg
