#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

namespace fwl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

// F(u; mu) with analytic derivatives. Everything takes mu explicitly so that
// continuation can move the parameter without rebuilding the model.
class VectorFieldModel {
 public:
  virtual ~VectorFieldModel() = default;

  virtual int n() const = 0;
  virtual Vec d_entries() const = 0;
  virtual double delta() const = 0;
  virtual double mu() const = 0;
  virtual std::vector<Vec> zeros() const = 0;

  virtual Vec F(const Vec& u, double mu) const = 0;
  virtual Mat jac(const Vec& u, double mu) const = 0;
  // hess[c](a, b) = d^2 F_c / du_a du_b
  virtual std::vector<Mat> hess(const Vec& u, double mu) const = 0;
  virtual Vec dmu_F(const Vec& u, double mu) const = 0;
  virtual Mat dmu_jac(const Vec& u, double mu) const = 0;

  virtual std::shared_ptr<const VectorFieldModel> with_mu(double mu) const = 0;

  // domain-checked evaluation at the stored mu
  Vec eval_field(const Vec& u) const;
  Vec D2() const { return d_entries().array().square(); }
  Vec rest_state() const { return zeros().front(); }
};

using ModelPtr = std::shared_ptr<const VectorFieldModel>;

// Two-component slow/fast field with D = diag(1, delta):
//   F = (F11(u1) + F12(u1, u2; mu)/delta,  F2(u1, u2)).
class SlowFastModel : public VectorFieldModel {
 public:
  struct Part {
    double v = 0, d1 = 0, d2 = 0, d11 = 0, d12 = 0, d22 = 0;
  };
  struct MuPart {
    double v = 0, d1 = 0, d2 = 0;
  };

  explicit SlowFastModel(double delta, double mu) : delta_(delta), mu_(mu) {}

  virtual double F11(double u1) const = 0;
  virtual double F11p(double u1) const = 0;
  virtual double F11pp(double u1) const = 0;
  virtual Part F12(double u1, double u2, double mu) const = 0;
  virtual MuPart F12_mu(double u1, double u2, double mu) const = 0;
  virtual Part F2(double u1, double u2) const = 0;

  // closed-form fast homoclinic when the model has one
  virtual bool has_closed_fast() const { return false; }
  virtual double u2h(double /*s*/, double /*zeta*/) const { return 0; }

  int n() const override { return 2; }
  Vec d_entries() const override;
  double delta() const override { return delta_; }
  double mu() const override { return mu_; }
  std::vector<Vec> zeros() const override;

  Vec F(const Vec& u, double mu) const override;
  Mat jac(const Vec& u, double mu) const override;
  std::vector<Mat> hess(const Vec& u, double mu) const override;
  Vec dmu_F(const Vec& u, double mu) const override;
  Mat dmu_jac(const Vec& u, double mu) const override;

 protected:
  double delta_;
  double mu_;
};

struct PcbParams {
  double m = 0.25;
  double c_w = 16.0;
  double f0 = 1.0;
  double f1 = 0.5;
  double t0 = 0.1;
  double t1 = 0.4;
  double delta = 0.05;
  double mu = 0.0;
};

// phospholipid/cholesterol bilayer field
class PcbModel : public SlowFastModel {
 public:
  explicit PcbModel(const PcbParams& p);
  // skips the parameter invariants; used for degenerate fixtures
  static std::shared_ptr<PcbModel> unchecked(const PcbParams& p);

  const PcbParams& params() const { return p_; }

  double W(double u) const;
  double Wp(double u) const;
  double Wpp(double u) const;
  double Wppp(double u) const;
  double f(double s) const;
  double fp(double s) const;
  double fpp(double s) const;
  double To(double s, double mu) const;
  double To_s(double s, double mu) const;
  double To_mu(double s) const;
  // positive zero of W in (m, 1)
  double u0() const;

  double F11(double u1) const override { return Wp(u1); }
  double F11p(double u1) const override { return Wpp(u1); }
  double F11pp(double u1) const override { return Wppp(u1); }
  Part F12(double u1, double u2, double mu) const override;
  MuPart F12_mu(double u1, double u2, double mu) const override;
  Part F2(double u1, double u2) const override;

  bool has_closed_fast() const override { return true; }
  double u2h(double s, double zeta) const override;

  std::shared_ptr<const VectorFieldModel> with_mu(double mu) const override;

 private:
  struct Unchecked {};
  PcbModel(const PcbParams& p, Unchecked);
  PcbParams p_;
};

void validate_pcb(const PcbParams& p);

// scalar test fixture F(u) = u - 3u^2/2, D = 1; homoclinic sech^2(z/2)
class ScalarSechModel : public VectorFieldModel {
 public:
  int n() const override { return 1; }
  Vec d_entries() const override { return Vec::Ones(1); }
  double delta() const override { return 1.0; }
  double mu() const override { return 0.0; }
  std::vector<Vec> zeros() const override { return {Vec::Zero(1)}; }
  Vec F(const Vec& u, double mu) const override;
  Mat jac(const Vec& u, double mu) const override;
  std::vector<Mat> hess(const Vec& u, double mu) const override;
  Vec dmu_F(const Vec& u, double mu) const override;
  Mat dmu_jac(const Vec& u, double mu) const override;
  std::shared_ptr<const VectorFieldModel> with_mu(double mu) const override;
};

// linear field F(u) = A u; the constant-coefficient fixture
class LinearModel : public VectorFieldModel {
 public:
  LinearModel(Vec d, Mat A) : d_(std::move(d)), A_(std::move(A)) {}
  int n() const override { return int(d_.size()); }
  Vec d_entries() const override { return d_; }
  double delta() const override { return 1.0; }
  double mu() const override { return 0.0; }
  std::vector<Vec> zeros() const override { return {Vec::Zero(d_.size())}; }
  Vec F(const Vec& u, double) const override { return A_ * u; }
  Mat jac(const Vec&, double) const override { return A_; }
  std::vector<Mat> hess(const Vec&, double) const override;
  Vec dmu_F(const Vec& u, double) const override { return Vec::Zero(u.size()); }
  Mat dmu_jac(const Vec& u, double) const override { return Mat::Zero(u.size(), u.size()); }
  std::shared_ptr<const VectorFieldModel> with_mu(double) const override;

 private:
  Vec d_;
  Mat A_;
};

// wraps a model as F -> c^2 F and D -> c D
class ScaledModel : public VectorFieldModel {
 public:
  ScaledModel(ModelPtr base, double c) : base_(std::move(base)), c_(c) {}
  int n() const override { return base_->n(); }
  Vec d_entries() const override { return c_ * base_->d_entries(); }
  double delta() const override { return base_->delta(); }
  double mu() const override { return base_->mu(); }
  std::vector<Vec> zeros() const override { return base_->zeros(); }
  Vec F(const Vec& u, double mu) const override { return c_ * c_ * base_->F(u, mu); }
  Mat jac(const Vec& u, double mu) const override { return c_ * c_ * base_->jac(u, mu); }
  std::vector<Mat> hess(const Vec& u, double mu) const override;
  Vec dmu_F(const Vec& u, double mu) const override { return c_ * c_ * base_->dmu_F(u, mu); }
  Mat dmu_jac(const Vec& u, double mu) const override { return c_ * c_ * base_->dmu_jac(u, mu); }
  std::shared_ptr<const VectorFieldModel> with_mu(double mu) const override;

 private:
  ModelPtr base_;
  double c_;
};

struct HyperbolicityReport {
  bool hyperbolic = false;
  std::vector<std::complex<double>> eigenvalues;
};

HyperbolicityReport normal_hyperbolicity(const VectorFieldModel& model, const Vec& a);

}  // namespace fwl
