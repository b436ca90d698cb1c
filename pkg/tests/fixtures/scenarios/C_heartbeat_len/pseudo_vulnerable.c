__int64 __fastcall dtls1_process_heartbeat(__int64 a1)
{
  unsigned __int8 *v1; // rbp
  unsigned int v2; // r12d
  char v3; // r13
  _BYTE *v4; // rax
  _BYTE *v5; // r14

  v1 = *(unsigned __int8 **)(*(_QWORD *)(a1 + 128) + 304LL);
  v3 = *v1;
  v2 = __ROL2__(*(_WORD *)(v1 + 1), 8);
  if ( v3 == 1 )
  {
    v4 = CRYPTO_malloc(v2 + 19, "d1_both.c", 1487LL);
    v5 = v4;
    *v4 = 2;
    v4[1] = BYTE1(v2);
    v4[2] = v2;
    memcpy(v4 + 3, v1 + 3, v2);
    dtls1_write_bytes(a1, 24LL, v5, v2 + 19);
    CRYPTO_free(v5);
  }
  return 0LL;
}
