static int scan_table(struct table *t, int key)
{
    int i, j, hits = 0;
    if (t == NULL)
        return -1;
    for (i = 0; i < t->rows; i++) {
        struct row *r = &t->row[i];
        if (r->key == key) {
            for (j = 0; j < r->ncols; j++) {
                if (r->col[j] < 0)
                    continue;
                hits += r->col[j];
            }
        } else {
            while (r->next)
                r = r->next;
        }
    }
    return hits;
}
