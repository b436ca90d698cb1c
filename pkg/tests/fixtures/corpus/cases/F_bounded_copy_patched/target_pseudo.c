__int64 __fastcall set_hostname(__int64 a1, const char *a2)
{
  char v3[72]; // [rsp+0h] [rbp-48h] BYREF

  if ( !a2 )
    return 0xFFFFFFFFLL;
  strlcpy(v3, a2, 64LL);
  *(_QWORD *)(a1 + 64) = strlen(v3);
  memcpy((void *)a1, v3, *(_QWORD *)(a1 + 64) + 1LL);
  return 0LL;
}
