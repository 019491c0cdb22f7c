#include <math.h>
#include <stdio.h>
#include <string.h>
#include "permstat.h"

int main(void) {
    /* Two variables, column-major. */
    double x[] = {1.2, 2.1, 0.3, 1.9, 3.0, 4.5, 2.0, 5.0};
    double y[] = {0.2, 0.1, -0.3, 0.9, 1.0, 1.5, 0.5, 2.0};
    PsConfig cfg;
    if (ps_config_default(&cfg) != PS_STATUS_OK) return 1;
    cfg.seed = 3;

    PsResult *r = NULL;
    if (ps_ttest2(x, 4, y, 4, 2, &cfg, &r) != PS_STATUS_OK) {
        fprintf(stderr, "%s\n", ps_last_error_message());
        return 2;
    }
    if (ps_result_len(r) != 2) return 3;
    PsVarStat s;
    if (ps_result_get(r, 0, &s) != PS_STATUS_OK || !s.tested) return 4;
    if (fabs(s.estimate - 1.15) > 1e-12) return 5;
    if (ps_result_get(r, 9, &s) != PS_STATUS_OUT_OF_RANGE) return 6;

    char *json = NULL;
    if (ps_result_to_json(r, &json) != PS_STATUS_OK) return 7;
    if (strstr(json, "\"schema\":\"permstat/1\"") == NULL) return 8;
    ps_string_free(json);
    ps_result_free(r);

    cfg.alpha = 2.0;
    if (ps_ttest2(x, 4, y, 4, 2, &cfg, &r) != PS_STATUS_INVALID_ARGUMENT) return 9;
    if (ps_last_error_message() == NULL) return 10;
    printf("ok %s\n", ps_version());
    return 0;
}
