/* cc demo.c -I../include ../../../target/release/libproxthresh_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include "proxthresh.h"

int main(void) {
    double v;
    if (pt_prox_power(1.0, 1.0, 1.5, 10.0, &v) != PT_STATUS_OK) {
        fprintf(stderr, "%s\n", pt_last_error_message());
        return 1;
    }
    printf("prox_power = %.12f\n", v);

    PtRegularizer *reg = NULL;
    if (pt_regularizer_elastic_net(2, 0.1, 0.5, 2.0, &reg) != PT_STATUS_OK) {
        fprintf(stderr, "%s\n", pt_last_error_message());
        return 1;
    }
    double x[] = {1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0};
    double y[] = {2.0, -1.0, 2.0, -1.0};
    double coef[2], objective;
    PtStatus s = pt_fit_precomputed(reg, x, y, 4, 2, 0.2, 10000, 1e-12, coef, &objective);
    pt_regularizer_free(reg);
    if (s != PT_STATUS_OK) {
        fprintf(stderr, "%s\n", pt_last_error_message());
        return 1;
    }
    printf("coefficients = %.6f %.6f, objective = %.6f\n", coef[0], coef[1], objective);
    return 0;
}
