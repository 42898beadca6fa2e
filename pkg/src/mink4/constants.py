"""Default tolerances and step sizes.

Every public routine that takes a tolerance defaults to a value from this
table, so changing a number here changes it everywhere.

=====================  ========  ==============================================
name                   value     used for
=====================  ========  ==============================================
LIGHTLIKE_TOL          1e-9      |<v,v>| <= tol * |v|^2 (Euclidean) => lightlike
ZERO_TOL               1e-12     Euclidean norm below which a vector is zero
FRAME_TOL              1e-9      Gram residual allowed for declared frames
NORMAL_TOL             1e-8      relative tangency residual of supplied normals
MT_TOL                 1e-6      |<H,H>| <= tol * |H|^2 => marginally trapped
H_ZERO_TOL             1e-10     |H| (Euclidean) below which H counts as zero
PRINCIPAL_TOL          1e-6      allowed non-n1 part of sigma(x,x), sigma(y,y)
CLASSIFY_TOL           1e-6      thresholds on nu, lambda, L, M, N, beta
FD_FIRST_STEP          1e-5      central difference step, first derivatives
FD_SECOND_STEP         1e-4      central difference step, second derivatives
FIELD_FD_STEP          1e-5      fallback step for invariant-field partials
COMPAT_REFUSE          1e-3      integrate() refuses above this residual
COMPAT_WARN            1e-6      integrate() logs a warning above this residual
REORTHO_EVERY          50        RK4 steps between Gram corrections
=====================  ========  ==============================================
"""

LIGHTLIKE_TOL = 1e-9
ZERO_TOL = 1e-12
FRAME_TOL = 1e-9
NORMAL_TOL = 1e-8
MT_TOL = 1e-6
H_ZERO_TOL = 1e-10
PRINCIPAL_TOL = 1e-6
CLASSIFY_TOL = 1e-6
FD_FIRST_STEP = 1e-5
FD_SECOND_STEP = 1e-4
FIELD_FD_STEP = 1e-5
COMPAT_REFUSE = 1e-3
COMPAT_WARN = 1e-6
REORTHO_EVERY = 50
