#define NAME_LEN 64

int set_hostname(struct host *h, const char *name)
{
    char buf[NAME_LEN];

    if (name == NULL)
        return -1;
    strlcpy(buf, name, NAME_LEN);
    h->len = strlen(buf);
    memcpy(h->name, buf, h->len + 1);
    return 0;
}
