#include <cmath>

#include "ssmp/map_engine.hpp"

namespace ssmp {

namespace {

// Coefficients of the [13/13] Padé approximant to exp (Higham, 2005).
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

template <class Matrix>
Matrix expm_pade13(const Matrix& a_in) {
    using Scalar = typename Matrix::Scalar;
    const auto n = a_in.rows();
    const double norm1 = a_in.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    const Matrix a = a_in / static_cast<Scalar>(std::ldexp(1.0, squarings));

    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const auto* b = kPade13;
    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
    const Matrix u = a * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;
    return r;
}

}  // namespace

ComplexMatrix expm(const ComplexMatrix& a) { return expm_pade13(a); }

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) { return expm_pade13(a); }

}  // namespace ssmp
