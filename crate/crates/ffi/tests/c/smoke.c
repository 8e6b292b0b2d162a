#include <math.h>
#include <stdio.h>
#include <string.h>

#include "skewstab.h"

#define CHECK(cond)                                            \
    do {                                                       \
        if (!(cond)) {                                         \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond); \
            return 1;                                          \
        }                                                      \
    } while (0)

int main(void) {
    SkewSystem *sys = NULL;
    CHECK(skewstab_system_new("scalar_decay", "{\"theta\": 0}", &sys) == SKEW_STATUS_OK);

    uintptr_t dim = 0;
    CHECK(skewstab_system_dimension(sys, &dim) == SKEW_STATUS_OK && dim == 1);

    double v = 1.0, w = 0.0;
    CHECK(skewstab_apply_cocycle(sys, 1.0, 0.0, 0.0, &v, 1, &w) == SKEW_STATUS_OK);
    CHECK(w > 0.0 && w < 1.0);

    CHECK(skewstab_apply_cocycle(sys, 0.0, 1.0, 0.0, &v, 1, &w) == SKEW_STATUS_TIME_ORDER);
    CHECK(skewstab_last_error() != NULL);

    char *json = NULL;
    int32_t code = -1;
    CHECK(skewstab_classify_json(sys, "{\"criteria\": \"fit-exp\"}", &json, &code) == SKEW_STATUS_OK);
    CHECK(strstr(json, "\"verdict\"") != NULL);
    CHECK(code == 0);
    skewstab_string_free(json);

    skewstab_system_free(sys);
    printf("ok %s\n", skewstab_version());
    return 0;
}
