/* Fuse two PNGs through the C interface.
 * usage: fuse VCI.png NGI.png OUT.png */
#include <stdio.h>
#include "nirfuse.h"

static int fail(const char *what, NfStatus s) {
    const char *msg = nf_last_error_message();
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "");
    return 1;
}

int main(int argc, char **argv) {
    if (argc != 4) {
        fprintf(stderr, "usage: %s VCI.png NGI.png OUT.png\n", argv[0]);
        return 2;
    }
    NfColorImage *vci = NULL, *fused = NULL;
    NfPlane *ngi = NULL;
    NfStatus s;
    if ((s = nf_color_image_load_png(argv[1], &vci)) != NF_STATUS_OK) return fail("load vci", s);
    if ((s = nf_plane_load_png(argv[2], &ngi)) != NF_STATUS_OK) return fail("load ngi", s);

    NfConfig *cfg = nf_config_new();
    if ((s = nf_fuse(vci, ngi, cfg, &fused)) != NF_STATUS_OK) return fail("fuse", s);
    if ((s = nf_color_image_save_png(fused, argv[3])) != NF_STATUS_OK) return fail("save", s);
    printf("fused %zux%zu with nirfuse %s\n", nf_color_image_width(fused),
           nf_color_image_height(fused), nf_version());

    nf_config_free(cfg);
    nf_color_image_free(vci);
    nf_color_image_free(fused);
    nf_plane_free(ngi);
    return 0;
}
