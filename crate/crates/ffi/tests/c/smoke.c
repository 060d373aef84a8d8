#include <math.h>
#include <stdio.h>
#include <string.h>

#include "subspace.h"

#define CHECK(expr)                                                          \
    do {                                                                     \
        SubspaceStatus s_ = (expr);                                          \
        if (s_ != SUBSPACE_STATUS_OK) {                                      \
            const char *msg = subspace_last_error_message();                 \
            fprintf(stderr, "%s failed (%d): %s\n", #expr, (int)s_,          \
                    msg ? msg : "?");                                        \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    const double rows[] = {1.0, 0.0, 0.0, 2.0, 1.0, 1.0};
    SubspaceInstance *inst = NULL;
    SubspaceRelaxation *relax = NULL;
    SubspaceSolution *sol = NULL;
    double relax_value = 0.0, svd = 0.0, value = 0.0, z[2];
    size_t r = 0, c = 0, best = 0;

    CHECK(subspace_instance_new(rows, 3, 2, NULL, NULL, 1, 2.0, &inst));
    CHECK(subspace_solve(inst, NULL, &relax));
    CHECK(subspace_relaxation_info(relax, &relax_value, NULL, NULL));
    CHECK(subspace_svd_value(inst, &svd));
    CHECK(subspace_round(inst, relax, 4, 1, &sol));
    CHECK(subspace_solution_info(sol, &value, &best, &r, &c));
    CHECK(subspace_solution_basis(sol, z, 2));

    if (fabs(relax_value - svd) > 1e-6 * svd || fabs(value - svd) > 1e-6 * svd || r != 2 || c != 1) {
        fprintf(stderr, "unexpected values %g %g %g\n", relax_value, value, svd);
        return 1;
    }
    if (subspace_instance_new(rows, 3, 2, NULL, NULL, 2, 2.0, &inst) != SUBSPACE_STATUS_INVALID_ARGUMENT ||
        inst != NULL) {
        return 1;
    }
    subspace_solution_free(sol);
    subspace_relaxation_free(relax);
    printf("ok %s %.12f\n", subspace_version(), value);
    return 0;
}
